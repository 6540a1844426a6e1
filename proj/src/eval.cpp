#include "ragbench/eval.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "ragbench/parallel.hpp"
#include "ragbench/text.hpp"

namespace ragbench::eval {

using json = nlohmann::json;

std::string to_string(Task t) {
  switch (t) {
    case Task::mcq: return "mcq";
    case Task::yes_no_maybe: return "yes_no_maybe";
    case Task::ner: return "ner";
  }
  return "mcq";
}

Task task_from_string(const std::string& s) {
  if (s == "mcq") return Task::mcq;
  if (s == "yes_no_maybe" || s == "ynm") return Task::yes_no_maybe;
  if (s == "ner") return Task::ner;
  throw ConfigError("unknown task '" + s + "'");
}

void EvalSample::validate() const {
  if (id.empty()) throw InvalidInputError("eval sample: empty id");
  if (query.empty()) throw InvalidInputError("eval sample " + id + ": empty question");
  switch (task) {
    case Task::mcq: {
      if (options.size() < 2) throw InvalidInputError("mcq " + id + ": needs at least 2 options");
      std::set<std::string> letters;
      for (const auto& o : options) {
        if (o.letter.empty() || !letters.insert(o.letter).second) {
          throw InvalidInputError("mcq " + id + ": option letters must be non-empty and distinct");
        }
      }
      if (!letters.contains(gold_label)) {
        throw InvalidInputError("mcq " + id + ": answer '" + gold_label + "' is not an option");
      }
      break;
    }
    case Task::yes_no_maybe:
      if (gold_label != "yes" && gold_label != "no" && gold_label != "maybe") {
        throw InvalidInputError("ynm " + id + ": answer must be yes, no or maybe");
      }
      break;
    case Task::ner:
      for (const auto& e : gold_entities) {
        if (e.mention.empty() || e.type.empty()) {
          throw InvalidInputError("ner " + id + ": entity mention and type must be non-empty");
        }
      }
      break;
  }
}

namespace {

template <typename Fn>
std::vector<EvalSample> read_jsonl(const std::string& path, Fn&& convert) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset '" + path + "'");
  std::vector<EvalSample> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    EvalSample s;
    try {
      s = convert(json::parse(line));
      s.validate();
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const InvalidInputError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (!ids.insert(s.id).second) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": duplicate id '" + s.id + "'", line_no);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string lower_trimmed(std::string s) {
  s = text::to_lower(s);
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

}  // namespace

std::vector<EvalSample> read_mcq(const std::string& path) {
  return read_jsonl(path, [](const json& j) {
    EvalSample s;
    s.task = Task::mcq;
    s.id = j.at("id").get<std::string>();
    s.query = j.at("question").get<std::string>();
    for (const auto& o : j.at("options")) {
      s.options.push_back({o.at("letter").get<std::string>(), o.at("text").get<std::string>()});
    }
    s.gold_label = j.at("answer").get<std::string>();
    return s;
  });
}

std::vector<EvalSample> read_ynm(const std::string& path) {
  return read_jsonl(path, [](const json& j) {
    EvalSample s;
    s.task = Task::yes_no_maybe;
    s.id = j.at("id").get<std::string>();
    s.query = j.at("question").get<std::string>();
    s.gold_label = lower_trimmed(j.at("answer").get<std::string>());
    return s;
  });
}

std::vector<EvalSample> read_ner(const std::string& path) {
  return read_jsonl(path, [](const json& j) {
    EvalSample s;
    s.task = Task::ner;
    s.id = j.at("id").get<std::string>();
    s.query = j.at("text").get<std::string>();
    for (const auto& e : j.at("entities")) {
      s.gold_entities.push_back({e.at("mention").get<std::string>(), e.at("type").get<std::string>()});
    }
    return s;
  });
}

std::string format_query(const EvalSample& sample) {
  switch (sample.task) {
    case Task::mcq: {
      std::string q = sample.query + "\n";
      for (const auto& o : sample.options) q += o.letter + ". " + o.text + "\n";
      return q + "Reply with the letter of the correct option.";
    }
    case Task::yes_no_maybe:
      return sample.query + "\nReply with yes, no, or maybe.";
    case Task::ner:
      return "List the named entities in the text as a JSON array of the form "
             "[{\"mention\": \"...\", \"type\": \"...\"}].\nText: " +
             sample.query;
  }
  return sample.query;
}

namespace {

std::size_t offset_of(std::string_view token, const std::string& text) {
  return static_cast<std::size_t>(token.data() - text.data());
}

bool is_answer_token(std::string_view token) {
  return text::to_lower(token).rfind("answer", 0) == 0;
}

}  // namespace

std::optional<std::string> parse_mcq_answer(const std::string& text,
                                            const std::vector<McqOption>& options) {
  auto match_option = [&](std::string_view token, bool ignore_case) -> std::optional<std::string> {
    for (const auto& o : options) {
      if (ignore_case ? text::to_lower(token) == text::to_lower(o.letter) : token == o.letter) {
        return o.letter;
      }
    }
    return std::nullopt;
  };

  const auto tokens = text::tokenize(text);
  // "answer is X", "answer: X", "answer is: (X)"; first hit wins.
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (text::to_lower(tokens[i]) != "answer") continue;
    std::size_t j = i + 1;
    if (j < tokens.size() && text::to_lower(tokens[j]) == "is") {
      ++j;
      if (j < tokens.size() && tokens[j] == ":") ++j;
    } else if (j < tokens.size() && tokens[j] == ":") {
      ++j;
    } else {
      continue;
    }
    if (j < tokens.size() && tokens[j] == "(") ++j;
    if (j < tokens.size()) {
      if (auto letter = match_option(tokens[j], true)) return letter;
    }
  }
  // Fallback is case-sensitive so the article "a" is not read as option A.
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    if (auto letter = match_option(*it, false)) return letter;
  }
  return std::nullopt;
}

std::optional<std::string> parse_ynm(const std::string& text) {
  const auto tokens = text::tokenize(text);
  std::optional<std::size_t> anchor;
  std::vector<std::pair<std::size_t, std::string>> labels;
  for (const auto& tok : tokens) {
    const auto low = text::to_lower(tok);
    if (low == "yes" || low == "no" || low == "maybe") labels.emplace_back(offset_of(tok, text), low);
    if (is_answer_token(tok)) anchor = offset_of(tok, text);
  }
  if (labels.empty()) return std::nullopt;
  if (anchor) {
    for (const auto& [pos, label] : labels) {
      if (pos > *anchor) return label;
    }
  }
  return labels.back().second;
}

std::vector<EntityInstance> parse_ner_json(const std::string& text) {
  const auto start = text.find('[');
  if (start == std::string::npos) return {};
  int depth = 0;
  bool in_string = false;
  std::size_t end = std::string::npos;
  for (std::size_t i = start; i < text.size() && end == std::string::npos; ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']' && --depth == 0) {
      end = i;
    }
  }
  if (end == std::string::npos) return {};

  const auto arr = json::parse(text.begin() + static_cast<std::ptrdiff_t>(start),
                               text.begin() + static_cast<std::ptrdiff_t>(end) + 1, nullptr, false);
  if (arr.is_discarded() || !arr.is_array()) return {};
  EntitySet found;
  for (const auto& item : arr) {
    if (!item.is_object()) return {};
    const auto m = item.find("mention");
    const auto t = item.find("type");
    if (m == item.end() || t == item.end() || !m->is_string() || !t->is_string()) return {};
    auto mention = m->get<std::string>();
    auto type = t->get<std::string>();
    if (mention.empty() || type.empty()) return {};
    found.insert({std::move(mention), std::move(type)});
  }
  return {found.begin(), found.end()};
}

Prf micro_f1(const std::vector<EntityPrediction>& preds, const std::vector<EntityPrediction>& golds) {
  if (preds.size() != golds.size()) {
    throw InvalidInputError("micro_f1: " + std::to_string(preds.size()) + " predictions for " +
                            std::to_string(golds.size()) + " gold samples");
  }
  std::size_t tp = 0, n_pred = 0, n_gold = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].id != golds[i].id) {
      throw InvalidInputError("micro_f1: sample " + std::to_string(i) + " id mismatch ('" + preds[i].id +
                              "' vs '" + golds[i].id + "')");
    }
    n_pred += preds[i].entities.size();
    n_gold += golds[i].entities.size();
    for (const auto& e : preds[i].entities) tp += golds[i].entities.count(e);
  }
  Prf out;
  out.precision = n_pred ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
  out.recall = n_gold ? static_cast<double>(tp) / static_cast<double>(n_gold) : 0.0;
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

double accuracy(const std::vector<std::optional<std::string>>& preds,
                const std::vector<std::string>& golds) {
  if (preds.size() != golds.size()) {
    throw InvalidInputError("accuracy: " + std::to_string(preds.size()) + " predictions for " +
                            std::to_string(golds.size()) + " gold labels");
  }
  if (preds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] && *preds[i] == golds[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double round1(double x) {
  // Nudge so 25.65 (stored as 25.6499...) rounds up.
  const double scaled = std::abs(x) * 10.0;
  const double r = std::floor(scaled + 0.5 + 1e-9);
  return std::copysign(r / 10.0, x);
}

double relative_change(double new_value, double old_value) {
  if (old_value == 0.0) throw InvalidInputError("relative_change: old value is zero");
  return round1(100.0 * (new_value - old_value) / old_value);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

EvalReport run_eval(const generate::PipelineConfig& cfg, const Datasets& datasets,
                    const generate::PipelineComponents& components, std::size_t parallelism) {
  std::vector<const EvalSample*> samples;
  for (const auto& [task, rows] : datasets) {
    for (const auto& s : rows) samples.push_back(&s);
  }

  std::vector<SampleOutcome> outcomes(samples.size());
  parallel_for(samples.size(), parallelism, [&](std::size_t i) {
    const auto& s = *samples[i];
    auto& out = outcomes[i];
    out.id = s.id;
    out.task = s.task;
    try {
      const auto trace = generate::answer_query(format_query(s), cfg, components);
      out.response = trace.final_response;
      out.rag_path = trace.rag_path;
      out.generate_calls = trace.generate_calls;
      out.latency_s = trace.latency_s;
    } catch (const generate::PipelineError& e) {
      out.rag_path = e.trace().rag_path;
      out.generate_calls = e.trace().generate_calls;
      out.latency_s = e.trace().latency_s;
      out.error = e.what();
    } catch (const InvalidInputError& e) {
      out.error = e.what();
    }
  });

  EvalReport report;
  report.config = cfg.preset_name;
  std::vector<double> scores;
  double total_latency = 0.0;
  std::size_t pos = 0;
  for (const auto& [task, rows] : datasets) {
    if (rows.empty()) continue;
    const auto name = to_string(task);
    report.n_samples[name] = rows.size();
    double score = 0.0;
    if (task == Task::ner) {
      std::vector<EntityPrediction> preds, golds;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& o = outcomes[pos + i];
        EntitySet pred;
        if (!o.error) {
          const auto parsed = parse_ner_json(o.response);
          pred.insert(parsed.begin(), parsed.end());
        }
        EntitySet gold(rows[i].gold_entities.begin(), rows[i].gold_entities.end());
        o.correct = !o.error && pred == gold;
        preds.push_back({rows[i].id, std::move(pred)});
        golds.push_back({rows[i].id, std::move(gold)});
      }
      score = micro_f1(preds, golds).f1;
    } else {
      std::vector<std::optional<std::string>> preds;
      std::vector<std::string> golds;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& o = outcomes[pos + i];
        std::optional<std::string> p;
        if (!o.error) p = task == Task::mcq ? parse_mcq_answer(o.response, rows[i].options) : parse_ynm(o.response);
        o.correct = p && *p == rows[i].gold_label;
        preds.push_back(std::move(p));
        golds.push_back(rows[i].gold_label);
      }
      score = accuracy(preds, golds);
    }
    report.per_task[name] = 100.0 * score;
    scores.push_back(100.0 * score);
    pos += rows.size();
  }

  for (const auto& o : outcomes) {
    total_latency += o.latency_s;
    if (o.error) ++report.errors;
    if (o.rag_path) {
      ++report.rag_queries;
      report.rag_generate_calls += o.generate_calls;
    } else {
      ++report.bypass_queries;
      report.bypass_generate_calls += o.generate_calls;
    }
  }
  report.avg_score = mean(scores);
  report.avg_latency_s = outcomes.empty() ? 0.0 : total_latency / static_cast<double>(outcomes.size());
  report.outcomes = std::move(outcomes);
  return report;
}

std::string report_to_json(const EvalReport& report, int indent) {
  json errors = json::array();
  for (const auto& o : report.outcomes) {
    if (o.error) errors.push_back({{"id", o.id}, {"task", to_string(o.task)}, {"error", *o.error}});
  }
  json obj = {
      {"config", report.config},
      {"per_task", report.per_task},
      {"avg_score", report.avg_score},
      {"avg_latency_s", report.avg_latency_s},
      {"n_samples", report.n_samples},
      {"rag_queries", report.rag_queries},
      {"bypass_queries", report.bypass_queries},
      {"rag_generate_calls", report.rag_generate_calls},
      {"bypass_generate_calls", report.bypass_generate_calls},
      {"errors", std::move(errors)},
  };
  return obj.dump(indent);
}

}  // namespace ragbench::eval
