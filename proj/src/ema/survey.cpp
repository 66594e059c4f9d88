#include "motionpi/ema/survey.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace motionpi::ema {

namespace {

const std::set<std::string>& answer_types() {
    static const std::set<std::string> types{"likert", "choice", "yes_no", "number", "text"};
    return types;
}

}  // namespace

SurveyDefinition SurveyDefinition::default_instrument() {
    return from_json(Json::parse(R"({
  "survey_id": "motionpi-ema-v1",
  "questions": [
    {"id": "activity", "prompt": "What were you doing just now?", "type": "choice",
     "options": ["walking", "running", "cycling", "sports", "housework", "other"]},
    {"id": "intensity", "prompt": "How hard did it feel?", "type": "likert", "min": 1, "max": 5},
    {"id": "enjoyment", "prompt": "How much did you enjoy it?", "type": "likert", "min": 1, "max": 5},
    {"id": "with_others", "prompt": "Were you with other people?", "type": "yes_no"},
    {"id": "location", "prompt": "Where were you?", "type": "choice",
     "options": ["home", "work", "outdoors", "gym", "other"]}
  ]
})"));
}

SurveyDefinition SurveyDefinition::from_json(const Json& doc) {
    auto bad = [](const std::string& path, const std::string& what) {
        return std::invalid_argument(path + ": " + what);
    };
    if (!doc.is_object()) throw bad("survey", "must be an object");
    SurveyDefinition def;
    if (!doc.contains("survey_id") || !doc["survey_id"].is_string() || doc["survey_id"].get<std::string>().empty()) {
        throw bad("survey_id", "required non-empty string");
    }
    def.id_ = doc["survey_id"].get<std::string>();
    if (!doc.contains("questions") || !doc["questions"].is_array() || doc["questions"].empty()) {
        throw bad("questions", "required non-empty array");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc["questions"].size(); ++i) {
        const auto& q = doc["questions"][i];
        const std::string path = "questions[" + std::to_string(i) + "]";
        if (!q.is_object()) throw bad(path, "must be an object");
        Question out;
        for (const char* key : {"id", "prompt", "type"}) {
            if (!q.contains(key) || !q[key].is_string() || q[key].get<std::string>().empty()) {
                throw bad(path + "." + key, "required non-empty string");
            }
        }
        out.id = q["id"].get<std::string>();
        out.prompt = q["prompt"].get<std::string>();
        out.type = q["type"].get<std::string>();
        if (!answer_types().count(out.type)) throw bad(path + ".type", "unknown answer type '" + out.type + "'");
        if (!seen.insert(out.id).second) throw bad(path + ".id", "duplicate question id");
        if (out.type == "likert" || out.type == "number") {
            if (!q.contains("min") || !q.contains("max") || !q["min"].is_number() || !q["max"].is_number()) {
                throw bad(path, "min and max required for " + out.type);
            }
            out.min = q["min"].get<double>();
            out.max = q["max"].get<double>();
            if (!(out.min < out.max)) throw bad(path + ".max", "must exceed min");
        }
        if (out.type == "choice") {
            if (!q.contains("options") || !q["options"].is_array() || q["options"].empty()) {
                throw bad(path + ".options", "required non-empty array");
            }
            for (const auto& o : q["options"]) {
                if (!o.is_string()) throw bad(path + ".options", "must hold strings");
                out.options.push_back(o.get<std::string>());
            }
        }
        def.questions_.push_back(std::move(out));
    }
    return def;
}

SurveyDefinition SurveyDefinition::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument(path.string() + ": cannot open survey definition");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return from_json(doc);
}

Json SurveyDefinition::to_json() const {
    Json qs = Json::array();
    for (const auto& q : questions_) {
        Json j{{"id", q.id}, {"prompt", q.prompt}, {"type", q.type}};
        if (q.type == "likert" || q.type == "number") {
            j["min"] = q.min;
            j["max"] = q.max;
        }
        if (q.type == "choice") j["options"] = q.options;
        qs.push_back(std::move(j));
    }
    return Json{{"survey_id", id_}, {"questions", qs}};
}

std::optional<std::string> SurveyDefinition::check(const std::vector<Response>& responses) const {
    if (responses.size() != questions_.size()) {
        return "expected " + std::to_string(questions_.size()) + " answers, got " + std::to_string(responses.size());
    }
    std::set<std::string> answered;
    for (const auto& r : responses) {
        const auto q = std::find_if(questions_.begin(), questions_.end(),
                                    [&](const Question& x) { return x.id == r.question_id; });
        if (q == questions_.end()) return "unknown question '" + r.question_id + "'";
        if (!answered.insert(r.question_id).second) return "question '" + r.question_id + "' answered twice";
        const Json& v = r.value;
        bool ok = false;
        if (q->type == "likert") {
            ok = v.is_number_integer() && v.get<double>() >= q->min && v.get<double>() <= q->max;
        } else if (q->type == "number") {
            ok = v.is_number() && std::isfinite(v.get<double>()) && v.get<double>() >= q->min && v.get<double>() <= q->max;
        } else if (q->type == "choice") {
            ok = v.is_string() && std::find(q->options.begin(), q->options.end(), v.get<std::string>()) != q->options.end();
        } else if (q->type == "yes_no") {
            ok = v.is_boolean();
        } else {
            ok = v.is_string();
        }
        if (!ok) return "invalid answer for '" + r.question_id + "'";
    }
    return std::nullopt;
}

std::vector<Response> SurveyDefinition::sample(std::mt19937_64& rng) const {
    std::vector<Response> out;
    for (const auto& q : questions_) {
        Response r{q.id, nullptr};
        const auto u = rng();
        if (q.type == "likert") {
            const auto span = static_cast<std::uint64_t>(q.max - q.min) + 1;
            r.value = static_cast<std::int64_t>(q.min) + static_cast<std::int64_t>(u % span);
        } else if (q.type == "number") {
            r.value = q.min + (q.max - q.min) * static_cast<double>(u >> 11) * 0x1.0p-53;
        } else if (q.type == "choice") {
            r.value = q.options[u % q.options.size()];
        } else if (q.type == "yes_no") {
            r.value = (u & 1) != 0;
        } else {
            r.value = "ok";
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace motionpi::ema
