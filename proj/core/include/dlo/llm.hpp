#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dlo/planner.hpp"

namespace dlo {

struct LlmConfig {
    std::string base_url = "http://127.0.0.1:8089";
    std::string chat_path = "/v1/chat/completions";
    std::string model = "routing-planner";
    std::string api_key_env = "DLO_LLM_API_KEY";  // name of the env var, never the key
    int timeout_ms = 15000;
    int max_retries = 2;      // re-asks on parse failure
    bool send_images = false; // attach rendered PNGs (full + zoom)
    double temperature = 0.0;
    std::string prompt_dir;   // empty = compiled-in default
};

LlmConfig llm_config_from_json(const std::string& text);

struct LlmTranscript {
    int requests = 0;
    int parse_retries = 0;
    bool fell_back = false;
    std::vector<std::string> raw_responses;
};

/// JSON-over-HTTP chat adapter. Malformed replies are re-asked up to
/// max_retries; transport failure or exhausted retries fall back to the
/// rule-based planner so a batch never aborts.
class LlmPlanner : public Planner {
public:
    explicit LlmPlanner(LlmConfig cfg);
    ~LlmPlanner() override;

    std::string name() const override { return "llm"; }
    RoutePlan plan(const SceneObservation& obs) override;
    Decision decide(const SceneObservation& obs, const RoutePlan& plan,
                    const PlannerHistory& history) override;

    const LlmTranscript& transcript() const { return transcript_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    LlmTranscript transcript_;
};

/// Versioned prompt assets (system + turn templates).
std::string load_prompt_asset(const std::string& name, const std::string& dir = "");

/// Serialize an observation to the compact text block used in prompts.
std::string observation_to_prompt_text(const SceneObservation& obs,
                                       const RoutePlan& plan,
                                       const PlannerHistory& history);

}  // namespace dlo
