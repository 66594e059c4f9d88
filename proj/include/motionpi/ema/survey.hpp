#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "motionpi/record/record.hpp"

namespace motionpi::ema {

using record::Json;

struct Response {
    std::string question_id;
    Json value;
};

// Answer types: "likert" (integer min..max), "choice" (one of options),
// "yes_no" (boolean), "number" (min..max), "text" (free string).
struct Question {
    std::string id;
    std::string prompt;
    std::string type;
    double min = 0;
    double max = 0;
    std::vector<std::string> options;
};

/// Survey instrument. File format:
///   {"survey_id": "...", "questions": [{"id", "prompt", "type", "min"?, "max"?, "options"?}, ...]}
class SurveyDefinition {
public:
    [[nodiscard]] static SurveyDefinition default_instrument();
    /// Throws std::invalid_argument naming the offending field.
    [[nodiscard]] static SurveyDefinition from_json(const Json& doc);
    [[nodiscard]] static SurveyDefinition load(const std::filesystem::path& path);
    [[nodiscard]] Json to_json() const;

    /// nullopt when every question is answered exactly once with a value of
    /// the right type.
    [[nodiscard]] std::optional<std::string> check(const std::vector<Response>& responses) const;
    /// Plausible answers for simulated participants.
    [[nodiscard]] std::vector<Response> sample(std::mt19937_64& rng) const;

    [[nodiscard]] const std::string& id() const { return id_; }
    [[nodiscard]] const std::vector<Question>& questions() const { return questions_; }

private:
    std::string id_;
    std::vector<Question> questions_;
};

}  // namespace motionpi::ema
