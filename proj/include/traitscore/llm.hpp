#ifndef TRAITSCORE_LLM_HPP
#define TRAITSCORE_LLM_HPP

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "traitscore/corpus.hpp"
#include "traitscore/metrics.hpp"

namespace traitscore {

struct MissingExemplarError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyFieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TimeoutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct HttpError : std::runtime_error {
  HttpError(int status, const std::string& msg) : std::runtime_error(msg), status(status) {}
  int status;
};
struct NoJsonFoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingKeyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidLabelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfidenceOutOfRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ExemplarLeakageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AllFailedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One rubric level: band description plus a single exemplar essay.
struct RubricLevel {
  Band band = Band::Weak;
  std::string description;
  std::string exemplar_text;
  std::string exemplar_id;  // optional; used for the leakage check when known
};

// Everything the scoring prompt needs except the essay under evaluation.
struct PromptTemplate {
  std::string role_text;
  std::string task_text;
  Trait trait = Trait::Content;
  std::string trait_definition;
  std::array<RubricLevel, 3> rubric;  // one level per band, ascending
  std::string output_spec_text;
};

// A full prompt specification for one essay.
struct PromptSpec {
  PromptTemplate tmpl;
  std::string essay_id;
  std::string essay_text;
};

// The canonical output-format section: instructs a JSON-only reply carrying
// feedback / score / confidence.
std::string default_output_spec_text();

// Sections concatenated in fixed order: role, task, trait definition, rubric
// with exemplars ascending by band, the essay delimited from the exemplars,
// and the output specification last.
std::string assemble_prompt(const PromptSpec& spec);

// Markers around the essay under evaluation; exposed for tests.
extern const char* const kEssayBeginMarker;
extern const char* const kEssayEndMarker;

struct LlmConfig {
  std::string endpoint_url;  // scheme://host[:port][/path-prefix]
  std::string model_name;
  double temperature = 0.8;
  int max_tokens = 10000;
  int max_transport_retries = 3;
  int max_reask = 2;
  int parallelism = 4;
  int backoff_base_ms = 1000;  // doubles per retry
  int timeout_s = 120;
  // Bearer token read from this environment variable when set.
  std::string api_key_env = "TRAITSCORE_API_KEY";
};

// One stateless chat-completions POST (fresh connection, no caching, no
// session reuse). Transport failures and non-2xx statuses are retried up to
// max_transport_retries times with exponential backoff, then surface as
// TransportError / TimeoutError / HttpError. Returns the assistant message
// text; attempts_out (optional) reports how many requests went out.
std::string request_completion(const LlmConfig& cfg, const std::string& prompt,
                               int* attempts_out = nullptr);

struct ParsedScore {
  Band band = Band::Weak;
  std::string justification;
  double confidence = 0.0;
  bool confidence_was_percent = false;  // value in (1,100] scaled down
};

// Extracts the first syntactically valid JSON object in the reply (prose and
// fenced code blocks tolerated) and validates the feedback/score/confidence
// schema. Score labels match case-insensitively.
ParsedScore parse_response(const std::string& raw);

enum class ScoreStatus { Ok, ParseFailed, RequestFailed };

std::string_view score_status_name(ScoreStatus s);

struct ScoreRecord {
  std::string essay_id;
  int rep_index = 0;
  ScoreStatus status = ScoreStatus::Ok;
  Band band = Band::Weak;  // meaningful only when status == Ok
  std::string justification;
  double confidence = 0.0;
  bool confidence_was_percent = false;
  std::string raw_response;  // last reply received
  std::string error;         // failure reason when status != Ok
  int requests_made = 0;
};

// assemble -> request -> parse. A malformed reply triggers a re-request with
// an appended format reminder, up to max_reask times; exhaustion (or a
// request failure after its own retry budget) yields a Failed record rather
// than an exception.
ScoreRecord score_essay(const LlmConfig& cfg, const PromptSpec& spec);

struct LabeledEssay {
  std::string id;
  std::string text;
  Band gold = Band::Weak;
};

struct ConfidenceSummary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  int n = 0;
};

struct RepResult {
  std::vector<ScoreRecord> records;  // one per essay, essay order
  MetricReport report;               // over successfully parsed records only
  int failures = 0;
};

struct TraitEvaluation {
  std::vector<RepResult> reps;
  // Present when reps >= 2.
  std::optional<RunAggregate> qwk_agg;
  std::optional<RunAggregate> f1_agg;
  std::optional<RunAggregate> tau_agg;  // only when tau was defined in every rep
  ConfidenceSummary confidence;         // over all successful records
};

// `reps` independent full passes over the essays, each a fresh set of
// stateless requests, scored against the gold bands. Up to cfg.parallelism
// requests run concurrently; results are keyed by essay so completion order
// never affects output. Throws AllFailedError when a rep yields no parsable
// record, ExemplarLeakageError when a rubric exemplar appears in the
// evaluation set.
TraitEvaluation run_trait_evaluation(const LlmConfig& cfg, const std::vector<LabeledEssay>& essays,
                                     const PromptTemplate& tmpl, int reps = 6);

// Prompt assets on disk, one directory per trait:
//   definition.txt, rubric_{weak,fair,strong}.txt, exemplar_{weak,fair,strong}.txt
// and optional exemplar_{weak,fair,strong}.id files naming source essays.
PromptTemplate load_prompt_template(const std::string& assets_dir, Trait trait,
                                    const std::string& role_text, const std::string& task_text);

// CSV dump: essay_id, rep, trait, gold_band, pred_band, confidence, status.
std::string predictions_csv(const TraitEvaluation& eval, const std::vector<LabeledEssay>& essays,
                            Trait trait);

}  // namespace traitscore

#endif  // TRAITSCORE_LLM_HPP
