#include "dlo/llm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dlo/errors.hpp"
#include "dlo/render.hpp"

#ifndef DLO_PROMPT_DIR
#define DLO_PROMPT_DIR ""
#endif

namespace dlo {

namespace {

using nlohmann::json;

constexpr const char* kPromptVersion = "dlo-prompt/1";

std::string base64(const std::vector<uint8_t>& data) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < data.size(); i += 3) {
        uint32_t v = static_cast<uint32_t>(data[i]) << 16;
        if (i + 1 < data.size()) v |= static_cast<uint32_t>(data[i + 1]) << 8;
        if (i + 2 < data.size()) v |= static_cast<uint32_t>(data[i + 2]);
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(i + 1 < data.size() ? tbl[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < data.size() ? tbl[v & 63] : '=');
    }
    return out;
}

// Models love to wrap JSON in markdown fences; strip them before parsing.
std::string strip_fences(const std::string& s) {
    auto l = s.find_first_not_of(" \t\r\n");
    if (l == std::string::npos) return s;
    auto r = s.find_last_not_of(" \t\r\n");
    std::string t = s.substr(l, r - l + 1);
    if (t.rfind("```", 0) == 0) {
        auto nl = t.find('\n');
        auto end = t.rfind("```");
        if (nl != std::string::npos && end != std::string::npos && end > nl)
            t = t.substr(nl + 1, end - nl - 1);
    }
    return t;
}

}  // namespace

LlmConfig llm_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("llm config is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("schema", "") != "dlo-llm/1")
        throw ConfigError("llm config must carry schema 'dlo-llm/1'");
    LlmConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        try {
            if (k == "schema") continue;
            else if (k == "base_url") cfg.base_url = it.value().get<std::string>();
            else if (k == "chat_path") cfg.chat_path = it.value().get<std::string>();
            else if (k == "model") cfg.model = it.value().get<std::string>();
            else if (k == "api_key_env") cfg.api_key_env = it.value().get<std::string>();
            else if (k == "timeout_ms") cfg.timeout_ms = it.value().get<int>();
            else if (k == "max_retries") cfg.max_retries = it.value().get<int>();
            else if (k == "send_images") cfg.send_images = it.value().get<bool>();
            else if (k == "temperature") cfg.temperature = it.value().get<double>();
            else if (k == "prompt_dir") cfg.prompt_dir = it.value().get<std::string>();
            else if (k == "api_key")
                throw ConfigError(
                    "llm config must not embed a key; set the environment variable named by "
                    "api_key_env instead");
            else throw ConfigError("llm config: unknown key '" + k + "'");
        } catch (const json::exception& e) {
            throw ConfigError("llm config key '" + k + "': " + e.what());
        }
    }
    return cfg;
}

std::string load_prompt_asset(const std::string& name, const std::string& dir) {
    std::string base = dir.empty() ? DLO_PROMPT_DIR : dir;
    std::string path = base + "/" + name;
    std::ifstream is(path);
    if (!is) throw ConfigError("prompt asset '" + path + "' is missing");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    auto nl = text.find('\n');
    std::string header = nl == std::string::npos ? text : text.substr(0, nl);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != kPromptVersion)
        throw ConfigError("prompt asset '" + path + "' has version '" + header +
                          "', expected '" + kPromptVersion + "'");
    return nl == std::string::npos ? std::string() : text.substr(nl + 1);
}

std::string observation_to_prompt_text(const SceneObservation& obs, const RoutePlan& plan,
                                       const PlannerHistory& history) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(3);
    os << "instruction: " << obs.instruction << "\n";
    os << "workspace: [" << obs.workspace.lo.x << ", " << obs.workspace.lo.y << "] to ["
       << obs.workspace.hi.x << ", " << obs.workspace.hi.y << "]\n";
    os << "zoom_window: [" << obs.zoom_window.lo.x << ", " << obs.zoom_window.lo.y << "] to ["
       << obs.zoom_window.hi.x << ", " << obs.zoom_window.hi.y << "]\n";
    os << "clips:\n";
    for (const auto& c : obs.clips) {
        os << "  - id " << c.id << " color " << color_name(c.color) << " at (" << c.pose.pos.x
           << ", " << c.pose.pos.y << ") heading " << c.pose.heading << " scale " << c.scale
           << (c.reversed ? " reversed" : "") << (c.routed ? " ROUTED" : " unrouted")
           << " head_staged " << (c.indicators.in_region ? "yes" : "no") << " flatness "
           << c.indicators.r_flat << "\n";
    }
    if (!obs.rope.empty()) {
        os << "rope head: (" << obs.rope.front().x << ", " << obs.rope.front().y << "), "
           << obs.rope.size() << " particles\n";
    }
    os << "plan order:";
    for (int id : plan.order) os << ' ' << id;
    os << "\n";
    os << "steps used: " << obs.status.steps_used << " of " << obs.status.max_steps << "\n";
    if (!history.empty()) {
        os << "recent skills (oldest first):\n";
        std::size_t from = history.size() > 6 ? history.size() - 6 : 0;
        for (std::size_t i = from; i < history.size(); ++i) {
            const auto& h = history[i];
            os << "  - " << decision_name(h.decision.kind) << " clip " << h.decision.target_clip
               << (h.outcome.collided ? " COLLIDED" : "") << " rope_out "
               << (h.outcome.indicators_after.rope_out ? "yes" : "no") << "\n";
        }
    }
    return os.str();
}

struct LlmPlanner::Impl {
    LlmConfig cfg;
    std::string system_prompt;
    std::string turn_prompt;
    httplib::Client client;

    explicit Impl(LlmConfig c)
        : cfg(std::move(c)),
          system_prompt(load_prompt_asset("system_v1.txt", cfg.prompt_dir)),
          turn_prompt(load_prompt_asset("turn_v1.txt", cfg.prompt_dir)),
          client(cfg.base_url) {
        client.set_connection_timeout(0, cfg.timeout_ms * 1000);
        client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    }

    json user_content(const std::string& text, const SceneObservation& obs) const {
        if (!cfg.send_images) return json(text);
        Scene scene;
        scene.workspace = obs.workspace;
        for (const auto& c : obs.clips) {
            Clip clip;
            clip.id = c.id;
            clip.pose = c.pose;
            clip.scale = c.scale;
            clip.color = c.color;
            scene.clips.push_back(clip);
        }
        auto png_url = [&](const Rect& view) {
            Canvas cv = render_view(scene, obs.rope, view, 320);
            return "data:image/png;base64," + base64(encode_png(cv));
        };
        json parts = json::array();
        parts.push_back({{"type", "text"}, {"text", text}});
        parts.push_back({{"type", "image_url"}, {"image_url", {{"url", png_url(obs.workspace)}}}});
        parts.push_back({{"type", "image_url"}, {"image_url", {{"url", png_url(obs.zoom_window)}}}});
        return parts;
    }

    // One HTTP round trip; transport failures retry with exponential backoff.
    // Returns the assistant message content, or nullopt after the last attempt.
    std::optional<std::string> post_chat(const json& messages, LlmTranscript& transcript) {
        json body{{"model", cfg.model}, {"temperature", cfg.temperature}, {"messages", messages}};
        httplib::Headers headers;
        if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
        for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
            ++transcript.requests;
            auto res = client.Post(cfg.chat_path, headers, body.dump(), "application/json");
            if (!res || res->status != 200) {
                transcript.raw_responses.push_back(
                    res ? "<http " + std::to_string(res->status) + ">" : "<transport error>");
                continue;
            }
            transcript.raw_responses.push_back(res->body);
            try {
                json reply = json::parse(res->body);
                return reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception&) {
                return res->body;  // let the caller treat it as a parse failure
            }
        }
        return std::nullopt;
    }

    // Ask for a JSON object; malformed content is re-asked with a corrective
    // message appended, up to max_retries.
    std::optional<json> ask(const std::string& turn_text, const SceneObservation& obs,
                            LlmTranscript& transcript) {
        json messages = json::array();
        messages.push_back({{"role", "system"}, {"content", system_prompt}});
        messages.push_back({{"role", "user"}, {"content", user_content(turn_text, obs)}});
        for (int round = 0; round <= cfg.max_retries; ++round) {
            auto content = post_chat(messages, transcript);
            if (!content) return std::nullopt;  // transport exhausted
            try {
                json parsed = json::parse(strip_fences(*content));
                if (parsed.is_object()) return parsed;
            } catch (const json::exception&) {
            }
            ++transcript.parse_retries;
            messages.push_back({{"role", "assistant"}, {"content", *content}});
            messages.push_back(
                {{"role", "user"},
                 {"content", "that reply was not a bare JSON object; answer again with only the "
                             "JSON object described above"}});
        }
        return std::nullopt;
    }
};

LlmPlanner::LlmPlanner(LlmConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

LlmPlanner::~LlmPlanner() = default;

RoutePlan LlmPlanner::plan(const SceneObservation& obs) {
    std::string text = impl_->turn_prompt;
    text += "\nmode: plan\n";
    text += observation_to_prompt_text(obs, RoutePlan{}, PlannerHistory{});
    text +=
        "\nReply with a JSON object {\"order\": [clip ids, head-first], "
        "\"reversed\": [booleans, same length]}.\n";
    for (int round = 0; round <= impl_->cfg.max_retries; ++round) {
        auto parsed = impl_->ask(text, obs, transcript_);
        if (!parsed) break;
        try {
            RoutePlan plan;
            plan.order = parsed->at("order").get<std::vector<int>>();
            if (parsed->contains("reversed"))
                plan.reversed = parsed->at("reversed").get<std::vector<bool>>();
            plan.reversed.resize(plan.order.size(), false);
            std::vector<int> sorted = plan.order;
            std::sort(sorted.begin(), sorted.end());
            std::vector<int> want;
            for (const auto& c : obs.clips) want.push_back(c.id);
            std::sort(want.begin(), want.end());
            if (sorted != want) throw ParseError("order is not a permutation of the clip ids");
            return plan;
        } catch (const std::exception&) {
            ++transcript_.parse_retries;
        }
    }
    transcript_.fell_back = true;
    return plan_initial(obs);
}

Decision LlmPlanner::decide(const SceneObservation& obs, const RoutePlan& plan,
                            const PlannerHistory& history) {
    std::string text = impl_->turn_prompt;
    text += "\nmode: decide\n";
    text += observation_to_prompt_text(obs, plan, history);
    text +=
        "\nReply with a JSON object {\"skill\": \"insert\"|\"pull\"|\"flatten\", "
        "\"target_clip\": id, \"done\": bool, \"reasoning\": text}. Set done=true with no "
        "skill once every clip is routed.\n";
    auto valid_clip = [&](int id) {
        for (const auto& c : obs.clips)
            if (c.id == id) return true;
        return false;
    };
    for (int round = 0; round <= impl_->cfg.max_retries; ++round) {
        auto parsed = impl_->ask(text, obs, transcript_);
        if (!parsed) break;
        try {
            Decision d;
            d.rationale = parsed->value("reasoning", "");
            if (parsed->value("done", false)) {
                d.kind = Decision::Kind::done;
                return d;
            }
            std::string skill = parsed->at("skill").get<std::string>();
            if (skill == "insert") d.kind = Decision::Kind::insert;
            else if (skill == "pull") d.kind = Decision::Kind::pull;
            else if (skill == "flatten") d.kind = Decision::Kind::flatten;
            else throw ParseError("unknown skill '" + skill + "'");
            d.target_clip = parsed->at("target_clip").get<int>();
            if (!valid_clip(d.target_clip))
                throw ParseError("target_clip " + std::to_string(d.target_clip) + " not in scene");
            return d;
        } catch (const std::exception&) {
            ++transcript_.parse_retries;
        }
    }
    transcript_.fell_back = true;
    return decide_next(obs, plan, history, kRecoveryThreshold);
}

}  // namespace dlo
