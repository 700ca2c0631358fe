#include "traitscore/llm.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace traitscore {

using nlohmann::json;

const char* const kEssayBeginMarker = "<<<ESSAY_BEGIN>>>";
const char* const kEssayEndMarker = "<<<ESSAY_END>>>";

std::string default_output_spec_text() {
  return "Respond with a single JSON object and nothing else. The object must contain exactly "
         "these keys:\n"
         "  \"feedback\": a string justifying the assigned score against the rubric,\n"
         "  \"score\": one of \"weak\", \"fair\" or \"strong\",\n"
         "  \"confidence\": a number between 0 and 1 expressing how certain you are.\n"
         "Do not wrap the JSON in additional commentary.";
}

namespace {

void require_nonempty(const std::string& value, const char* field) {
  if (value.empty()) {
    throw EmptyFieldError(std::string("prompt field '") + field + "' is empty");
  }
}

}  // namespace

std::string assemble_prompt(const PromptSpec& spec) {
  const PromptTemplate& t = spec.tmpl;
  require_nonempty(t.role_text, "role_text");
  require_nonempty(t.task_text, "task_text");
  require_nonempty(t.trait_definition, "trait_definition");
  require_nonempty(t.output_spec_text, "output_spec_text");
  require_nonempty(spec.essay_text, "essay_text");
  for (Band b : kAllBands) {
    const RubricLevel& level = t.rubric[ordinal(b) - 1];
    if (level.band != b) {
      throw MissingExemplarError("rubric levels must be ordered weak, fair, strong");
    }
    if (level.description.empty()) {
      throw EmptyFieldError("rubric description for band '" + std::string(band_label(b)) +
                            "' is empty");
    }
    if (level.exemplar_text.empty()) {
      throw MissingExemplarError("no exemplar essay for band '" + std::string(band_label(b)) + "'");
    }
  }

  std::string out;
  out += "# Role\n";
  out += t.role_text;
  out += "\n\n# Task\n";
  out += t.task_text;
  out += "\n\n# Trait definition: ";
  out += trait_display_name(t.trait);
  out += "\n";
  out += t.trait_definition;
  out += "\n\n# Scoring rubric and examples\n";
  for (Band b : kAllBands) {
    const RubricLevel& level = t.rubric[ordinal(b) - 1];
    out += "\n## Level: ";
    out += band_label(b);
    out += "\n";
    out += level.description;
    out += "\n### Example essay (";
    out += band_label(b);
    out += ")\n";
    out += level.exemplar_text;
    out += "\n";
  }
  out += "\n# Essay to evaluate\n";
  out += "The essay between the markers below is the one to score. It is not an example.\n";
  out += kEssayBeginMarker;
  out += "\n";
  out += spec.essay_text;
  out += "\n";
  out += kEssayEndMarker;
  out += "\n\n# Output format\n";
  out += t.output_spec_text;
  out += "\n";
  return out;
}

namespace {

struct ParsedUrl {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // no trailing slash
};

ParsedUrl parse_endpoint_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw TransportError("endpoint url '" + url + "' lacks a scheme");
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  ParsedUrl parsed;
  if (path_start == std::string::npos) {
    parsed.origin = url;
  } else {
    parsed.origin = url.substr(0, path_start);
    parsed.path_prefix = url.substr(path_start);
    while (!parsed.path_prefix.empty() && parsed.path_prefix.back() == '/') {
      parsed.path_prefix.pop_back();
    }
  }
  return parsed;
}

}  // namespace

std::string request_completion(const LlmConfig& cfg, const std::string& prompt, int* attempts_out) {
  if (cfg.temperature < 0.0 || cfg.max_tokens <= 0 || cfg.max_transport_retries < 0) {
    throw std::invalid_argument("invalid llm configuration");
  }
  const ParsedUrl endpoint = parse_endpoint_url(cfg.endpoint_url);

  json body;
  body["model"] = cfg.model_name;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = cfg.temperature;
  body["max_tokens"] = cfg.max_tokens;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!cfg.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  const int max_attempts = cfg.max_transport_retries + 1;
  int attempts = 0;
  std::string last_error;
  bool last_was_timeout = false;
  int last_status = 0;

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt > 0) {
      const auto delay = std::chrono::milliseconds(
          static_cast<long long>(cfg.backoff_base_ms) * (1LL << (attempt - 1)));
      std::this_thread::sleep_for(delay);
    }
    ++attempts;
    if (attempts_out) *attempts_out = attempts;

    // A fresh client per attempt: no connection reuse, no session state.
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(cfg.timeout_s, 0);
    client.set_read_timeout(cfg.timeout_s, 0);
    client.set_write_timeout(cfg.timeout_s, 0);
    client.set_keep_alive(false);

    auto result = client.Post(endpoint.path_prefix + "/chat/completions", headers, payload,
                              "application/json");
    if (!result) {
      last_was_timeout = result.error() == httplib::Error::ConnectionTimeout ||
                         result.error() == httplib::Error::Read ||
                         result.error() == httplib::Error::Write;
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status < 200 || result->status >= 300) {
      last_status = result->status;
      last_error = "HTTP " + std::to_string(result->status);
      last_was_timeout = false;
      continue;
    }

    json reply = json::parse(result->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty()) {
      throw HttpError(result->status, "endpoint returned 2xx but no choices array");
    }
    const json& first = reply["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
      throw HttpError(result->status, "endpoint reply lacks message content");
    }
    return first["message"]["content"].get<std::string>();
  }

  const std::string detail =
      " after " + std::to_string(attempts) + " attempts (" + last_error + ")";
  if (last_status != 0) {
    throw HttpError(last_status, "endpoint kept failing" + detail);
  }
  if (last_was_timeout) {
    throw TimeoutError("endpoint timed out" + detail);
  }
  throw TransportError("endpoint unreachable" + detail);
}

namespace {

// Extracts the span of the first balanced JSON object that nlohmann accepts,
// respecting string literals and escapes.
std::optional<std::string> first_json_object(const std::string& raw) {
  for (std::size_t start = raw.find('{'); start != std::string::npos;
       start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        --depth;
        if (depth == 0) {
          std::string candidate = raw.substr(start, i - start + 1);
          const json parsed = json::parse(candidate, nullptr, false);
          if (!parsed.is_discarded() && parsed.is_object()) {
            return candidate;
          }
          break;  // balanced but unparsable; try the next brace
        }
      }
    }
  }
  return std::nullopt;
}

std::string lower_ascii(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

}  // namespace

ParsedScore parse_response(const std::string& raw) {
  const std::optional<std::string> object_text = first_json_object(raw);
  if (!object_text) {
    throw NoJsonFoundError("no JSON object found in model reply");
  }
  const json obj = json::parse(*object_text);

  for (const char* key : {"feedback", "score", "confidence"}) {
    if (!obj.contains(key)) {
      throw MissingKeyError(std::string("reply JSON lacks key '") + key + "'");
    }
  }
  if (!obj["feedback"].is_string()) {
    throw MissingKeyError("reply key 'feedback' is not a string");
  }
  if (!obj["score"].is_string()) {
    throw MissingKeyError("reply key 'score' is not a string");
  }
  if (!obj["confidence"].is_number()) {
    throw MissingKeyError("reply key 'confidence' is not a number");
  }

  ParsedScore parsed;
  parsed.justification = obj["feedback"].get<std::string>();

  std::string label = lower_ascii(obj["score"].get<std::string>());
  while (!label.empty() && (label.front() == ' ' || label.front() == '\t')) label.erase(0, 1);
  while (!label.empty() && (label.back() == ' ' || label.back() == '\t')) label.pop_back();
  try {
    parsed.band = band_from_label(label);
  } catch (const OutOfRangeError&) {
    throw InvalidLabelError("score label '" + obj["score"].get<std::string>() +
                            "' is not one of weak/fair/strong");
  }

  double confidence = obj["confidence"].get<double>();
  if (!std::isfinite(confidence)) {
    throw ConfidenceOutOfRangeError("confidence is not finite");
  }
  if (confidence > 1.0 && confidence <= 100.0) {
    // Small models often answer in percent.
    confidence /= 100.0;
    parsed.confidence_was_percent = true;
  }
  if (confidence < 0.0 || confidence > 1.0) {
    throw ConfidenceOutOfRangeError("confidence " + std::to_string(obj["confidence"].get<double>()) +
                                    " outside [0,1]");
  }
  parsed.confidence = confidence;
  return parsed;
}

std::string_view score_status_name(ScoreStatus s) {
  switch (s) {
    case ScoreStatus::Ok:
      return "ok";
    case ScoreStatus::ParseFailed:
      return "parse_failed";
    case ScoreStatus::RequestFailed:
      return "request_failed";
  }
  return "?";
}

ScoreRecord score_essay(const LlmConfig& cfg, const PromptSpec& spec) {
  ScoreRecord record;
  record.essay_id = spec.essay_id;
  const std::string prompt = assemble_prompt(spec);
  const std::string reminder =
      "\n\nReminder: your previous reply could not be parsed. " + default_output_spec_text();

  std::string current = prompt;
  for (int ask = 0; ask <= cfg.max_reask; ++ask) {
    std::string raw;
    int attempts = 0;
    try {
      raw = request_completion(cfg, current, &attempts);
      record.requests_made += attempts;
    } catch (const std::runtime_error& err) {
      record.requests_made += attempts;
      record.status = ScoreStatus::RequestFailed;
      record.error = err.what();
      return record;
    }
    record.raw_response = raw;
    try {
      const ParsedScore parsed = parse_response(raw);
      record.status = ScoreStatus::Ok;
      record.band = parsed.band;
      record.justification = parsed.justification;
      record.confidence = parsed.confidence;
      record.confidence_was_percent = parsed.confidence_was_percent;
      record.error.clear();
      return record;
    } catch (const std::runtime_error& err) {
      record.status = ScoreStatus::ParseFailed;
      record.error = err.what();
      current = prompt + reminder;
    }
  }
  return record;
}

TraitEvaluation run_trait_evaluation(const LlmConfig& cfg, const std::vector<LabeledEssay>& essays,
                                     const PromptTemplate& tmpl, int reps) {
  if (essays.empty()) {
    throw std::invalid_argument("run_trait_evaluation needs at least one essay");
  }
  if (reps < 1) {
    throw std::invalid_argument("reps must be >= 1");
  }
  if (cfg.parallelism < 1) {
    throw std::invalid_argument("parallelism must be >= 1");
  }
  for (const RubricLevel& level : tmpl.rubric) {
    for (const LabeledEssay& essay : essays) {
      if (!level.exemplar_id.empty() && level.exemplar_id == essay.id) {
        throw ExemplarLeakageError("exemplar '" + level.exemplar_id +
                                   "' is part of the evaluation set");
      }
      if (level.exemplar_text == essay.text) {
        throw ExemplarLeakageError("exemplar text for band '" +
                                   std::string(band_label(level.band)) +
                                   "' matches evaluation essay '" + essay.id + "'");
      }
    }
  }

  // Surface template defects here rather than inside a worker thread.
  {
    PromptSpec probe;
    probe.tmpl = tmpl;
    probe.essay_id = essays.front().id;
    probe.essay_text = essays.front().text;
    assemble_prompt(probe);
  }

  TraitEvaluation eval;
  std::vector<double> qwks;
  std::vector<double> f1s;
  std::vector<double> taus;
  bool tau_everywhere = true;

  for (int rep = 0; rep < reps; ++rep) {
    RepResult result;
    result.records.resize(essays.size());

    const int workers = std::min<int>(cfg.parallelism, static_cast<int>(essays.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= essays.size()) break;
        PromptSpec spec;
        spec.tmpl = tmpl;
        spec.essay_id = essays[i].id;
        spec.essay_text = essays[i].text;
        ScoreRecord record;
        try {
          record = score_essay(cfg, spec);
        } catch (const std::exception& err) {
          record.essay_id = essays[i].id;
          record.status = ScoreStatus::RequestFailed;
          record.error = err.what();
        }
        record.rep_index = rep;
        result.records[i] = std::move(record);
      }
    };
    if (workers == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int w = 0; w < workers; ++w) pool.emplace_back(work);
      for (std::thread& t : pool) t.join();
    }

    std::vector<Band> pred;
    std::vector<Band> gold;
    for (std::size_t i = 0; i < essays.size(); ++i) {
      if (result.records[i].status == ScoreStatus::Ok) {
        pred.push_back(result.records[i].band);
        gold.push_back(essays[i].gold);
      } else {
        ++result.failures;
      }
    }
    if (pred.empty()) {
      throw AllFailedError("repetition " + std::to_string(rep + 1) +
                           " produced no parsable record");
    }
    result.report = compute_report(pred, gold);
    qwks.push_back(result.report.qwk);
    f1s.push_back(result.report.weighted_f1);
    if (result.report.kendall_tau) {
      taus.push_back(*result.report.kendall_tau);
    } else {
      tau_everywhere = false;
    }
    eval.reps.push_back(std::move(result));
  }

  if (reps >= 2) {
    eval.qwk_agg = aggregate(qwks);
    eval.f1_agg = aggregate(f1s);
    if (tau_everywhere) eval.tau_agg = aggregate(taus);
  }

  ConfidenceSummary summary;
  summary.min = 1.0;
  summary.max = 0.0;
  double sum = 0.0;
  for (const RepResult& rep : eval.reps) {
    for (const ScoreRecord& rec : rep.records) {
      if (rec.status != ScoreStatus::Ok) continue;
      summary.min = std::min(summary.min, rec.confidence);
      summary.max = std::max(summary.max, rec.confidence);
      sum += rec.confidence;
      ++summary.n;
    }
  }
  if (summary.n > 0) {
    summary.mean = sum / summary.n;
  } else {
    summary.min = summary.max = 0.0;
  }
  eval.confidence = summary;
  return eval;
}

namespace {

std::string read_asset(const std::filesystem::path& path, bool required) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (required) {
      throw EmptyFieldError("prompt asset missing: " + path.string());
    }
    return {};
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  while (!content.empty() && (content.back() == '\n' || content.back() == '\r')) {
    content.pop_back();
  }
  if (required && content.empty()) {
    throw EmptyFieldError("prompt asset is empty: " + path.string());
  }
  return content;
}

}  // namespace

PromptTemplate load_prompt_template(const std::string& assets_dir, Trait trait,
                                    const std::string& role_text, const std::string& task_text) {
  const std::filesystem::path dir = std::filesystem::path(assets_dir) / std::string(trait_name(trait));
  PromptTemplate tmpl;
  tmpl.role_text = role_text;
  tmpl.task_text = task_text;
  tmpl.trait = trait;
  tmpl.trait_definition = read_asset(dir / "definition.txt", true);
  for (Band b : kAllBands) {
    RubricLevel& level = tmpl.rubric[ordinal(b) - 1];
    const std::string name(band_label(b));
    level.band = b;
    level.description = read_asset(dir / ("rubric_" + name + ".txt"), true);
    level.exemplar_text = read_asset(dir / ("exemplar_" + name + ".txt"), true);
    level.exemplar_id = read_asset(dir / ("exemplar_" + name + ".id"), false);
  }
  tmpl.output_spec_text = default_output_spec_text();
  return tmpl;
}

std::string predictions_csv(const TraitEvaluation& eval, const std::vector<LabeledEssay>& essays,
                            Trait trait) {
  std::string out = "essay_id,rep,trait,gold_band,pred_band,confidence,status\n";
  char buf[64];
  for (const RepResult& rep : eval.reps) {
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
      const ScoreRecord& rec = rep.records[i];
      out += rec.essay_id;
      out += ',';
      out += std::to_string(rec.rep_index);
      out += ',';
      out += trait_name(trait);
      out += ',';
      out += band_label(essays[i].gold);
      out += ',';
      if (rec.status == ScoreStatus::Ok) {
        out += band_label(rec.band);
        out += ',';
        std::snprintf(buf, sizeof buf, "%.17g", rec.confidence);
        out += buf;
      } else {
        out += ",";
      }
      out += ',';
      out += score_status_name(rec.status);
      out += '\n';
    }
  }
  return out;
}

}  // namespace traitscore
