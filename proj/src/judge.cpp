#include "sabia/judge.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "embedded_templates.hpp"
#include "sabia/error.hpp"
#include "sabia/text.hpp"

namespace sabia {
namespace {

constexpr std::array<std::string_view, 3> kSlots = {"{question}", "{reference}", "{candidate}"};
constexpr std::array<const char*, 5> kCriteria = {"relevancia", "acuracia", "completude", "clareza",
                                                  "concisao"};

int criterion(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) {
    throw JudgeFormatError(std::string("judge reply lacks '") + name + "'");
  }
  const auto& v = j[name];
  long long value = 0;
  if (v.is_number_integer()) {
    value = v.get<long long>();
  } else if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) {
    value = static_cast<long long>(v.get<double>());
  } else {
    throw JudgeFormatError(std::string("judge criterion '") + name + "' is not an integer");
  }
  if (value < 1 || value > 5) {
    throw JudgeFormatError(std::string("judge criterion '") + name + "' = " + std::to_string(value) +
                           " is outside 1..5");
  }
  return static_cast<int>(value);
}

}  // namespace

const std::string_view kJudgeFormatReminder =
    "Sua resposta anterior não pôde ser interpretada. Responda novamente APENAS com um objeto JSON "
    "válido contendo as chaves \"relevancia\", \"acuracia\", \"completude\", \"clareza\" e "
    "\"concisao\" (inteiros de 1 a 5) e \"rationale\" (texto), sem nenhum texto fora do JSON.";

double normalize_criteria(const std::array<int, 5>& criteria) {
  const int sum = std::accumulate(criteria.begin(), criteria.end(), 0);
  return static_cast<double>(sum - 5) / 20.0;
}

std::string builtin_judge_template_text() { return std::string(embedded::kJudgeTemplate); }

JudgeTemplate JudgeTemplate::from_text(std::string text) {
  for (const auto slot : kSlots) {
    const auto first = text.find(slot);
    if (first == std::string::npos) {
      throw TemplateError("judge template is missing placeholder " + std::string(slot));
    }
    if (text.find(slot, first + 1) != std::string::npos) {
      throw TemplateError("judge template repeats placeholder " + std::string(slot));
    }
  }
  return JudgeTemplate(std::move(text));
}

JudgeTemplate JudgeTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TemplateError("cannot read judge template " + path.string());
  }
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_text(std::string(strip_bom(raw)));
}

JudgeTemplate JudgeTemplate::builtin() { return from_text(builtin_judge_template_text()); }

std::string JudgeTemplate::render(const std::string& question, const std::string& reference,
                                  const std::string& candidate) const {
  const std::array<const std::string*, 3> values = {&question, &reference, &candidate};
  std::array<std::pair<std::size_t, std::size_t>, 3> order{};
  for (std::size_t s = 0; s < kSlots.size(); ++s) {
    order[s] = {text_.find(kSlots[s]), s};
  }
  std::sort(order.begin(), order.end());
  std::string out;
  std::size_t cursor = 0;
  for (const auto& [pos, slot] : order) {
    out.append(text_, cursor, pos - cursor);
    out += *values[slot];
    cursor = pos + kSlots[slot].size();
  }
  out.append(text_, cursor, std::string::npos);
  return out;
}

JudgeVerdict parse_judge_reply(std::string_view reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw JudgeFormatError("judge reply contains no JSON object");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(reply.substr(open, close - open + 1));
  } catch (const nlohmann::json::exception& e) {
    throw JudgeFormatError(std::string("judge reply is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw JudgeFormatError("judge reply is not a JSON object");
  }
  JudgeVerdict v;
  v.relevancia = criterion(j, kCriteria[0]);
  v.acuracia = criterion(j, kCriteria[1]);
  v.completude = criterion(j, kCriteria[2]);
  v.clareza = criterion(j, kCriteria[3]);
  v.concisao = criterion(j, kCriteria[4]);
  if (j.contains("rationale") && j["rationale"].is_string()) {
    v.rationale = j["rationale"].get<std::string>();
  }
  v.normalized = normalize_criteria(v.criteria());
  return v;
}

JudgeVerdict judge_evaluate(const ChatBackend& client, const ModelSpec& judge_spec,
                            const std::string& question, const std::string& reference,
                            const std::string& candidate, const JudgeTemplate& tmpl) {
  if (is_blank(question) || is_blank(reference) || is_blank(candidate)) {
    throw ConfigError("judge_evaluate requires nonempty question, reference and candidate");
  }
  const GenerationParams params{kEvalTemperature, 512};
  std::vector<ChatMessage> messages = {{Role::user, tmpl.render(question, reference, candidate)}};
  const auto first = client.complete(judge_spec, messages, params);
  try {
    return parse_judge_reply(first.text);
  } catch (const JudgeFormatError&) {
    messages.push_back({Role::assistant, first.text});
    messages.push_back({Role::user, std::string(kJudgeFormatReminder)});
  }
  const auto second = client.complete(judge_spec, messages, params);
  try {
    return parse_judge_reply(second.text);
  } catch (const JudgeFormatError& e) {
    throw JudgeFormatError(std::string("judge reply unusable after one re-ask: ") + e.what());
  }
}

}  // namespace sabia
