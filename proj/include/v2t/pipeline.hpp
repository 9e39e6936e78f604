#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2t/gateway.hpp"
#include "v2t/metrics.hpp"
#include "v2t/prompts.hpp"
#include "v2t/rag.hpp"
#include "v2t/rlcore.hpp"

namespace v2t::pipeline {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct RunConfig {
    int iterations = 3;
    std::uint64_t seed = 0;
    // 0 means adaptive halving with a floor of 3.
    std::size_t retention_k = 0;
    double feedback_margin = 0.05;
    std::string initial_prompt = "describe the scene";
    int batch_episodes = 8;
    int max_updates = 50;
    double value_coef = 0.5;
    std::string algo = "feedback";
    std::uint64_t encoder_seed = 42;
    rlcore::OptimizerState opt;
    rlcore::PpoConfig ppo;
};

void validate(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

struct IterationState {
    int i = 1;
    bool feedback = false;
    std::optional<rlcore::Transition> pending_update;
    prompts::PromptCatalog catalog;
    // Original action index per current catalog position.
    std::vector<std::size_t> live;
    std::vector<EmbeddingVector> prompt_embeddings;
    std::size_t total_actions = 0;
    std::string text;
    std::string caption_prompt;
    std::vector<double> observation;
    std::mt19937_64 rng;
};

struct IterationRecord {
    int iteration = 0;
    std::string caption;
    std::string selected_prompt_id;
    std::size_t selected_action = 0;
    double reward = 0.0;
    double feedback_score = 0.0;
    std::string retrieved_doc;
    bool feedback_applied = false;
    bool feedback_triggered = false;
    double objective = 0.0;
    std::size_t catalog_size = 0;
};

struct ImageReport {
    std::string image;
    std::string digest;
    std::string initial_caption;
    std::string final_text;
    std::vector<IterationRecord> iterations;
    bool complete = true;
    std::string failed_stage;
    metrics::TextStats final_stats;
    double semantic_initial_final = 0.0;
    double mean_reward = 0.0;
    double mean_feedback = 0.0;
};

struct PipelineResult {
    ImageReport report;
    std::vector<rlcore::Transition> transitions;
};

double compute_reward(std::size_t selected, const std::vector<prompts::RankedPrompt>& ranked);

IterationState init_state(const prompts::PromptCatalog& catalog,
                          const RunConfig& cfg,
                          const std::string& digest,
                          const std::string& episode_tag,
                          const EmbedFn& embedder);

struct IterationOutcome {
    rlcore::Transition transition;
    IterationRecord record;
};

// One Algorithm-1 iteration: caption, pending feedback update, rank,
// select, reward, prompt-list refinement, retrieval, objective, trigger.
IterationOutcome run_iteration(IterationState& state,
                               rlcore::PolicyParams& policy,
                               rlcore::OptimizerState& update_opt,
                               const rag::VectorIndex& index,
                               const gateway::ModelEndpoint& endpoint,
                               const std::vector<std::uint8_t>& image,
                               const RunConfig& cfg);

// Full per-image episode. The policy is taken by value: feedback updates
// stay local to this episode, which keeps concurrent images independent.
PipelineResult run_pipeline(const std::vector<std::uint8_t>& image,
                            const std::string& label,
                            const prompts::PromptCatalog& catalog,
                            const RunConfig& cfg,
                            rlcore::PolicyParams policy,
                            const rag::VectorIndex& index,
                            const gateway::ModelEndpoint& endpoint,
                            const std::string& episode_tag = "");

nlohmann::json report_to_json(const ImageReport& report, const RunConfig& cfg);

struct UpdateLog {
    std::size_t update = 0;
    double objective = 0.0;
    double mean_reward = 0.0;
    double mean_feedback = 0.0;
};

struct TrainProgress {
    std::size_t update = 0;
    double objective = 0.0;
    double mean_reward = 0.0;
    double mean_feedback = 0.0;
    const rlcore::PolicyParams& policy;
};

using StopFn = std::function<bool(const TrainProgress&)>;

struct TrainResult {
    rlcore::PolicyParams policy;
    rlcore::OptimizerState opt;
    std::vector<UpdateLog> log;
};

// Episode batches against a frozen snapshot, then epochs of shuffled
// minibatch ascent on the configured objective plus value regression.
TrainResult train(const std::vector<std::pair<std::string, std::vector<std::uint8_t>>>& images,
                  const prompts::PromptCatalog& catalog,
                  const RunConfig& cfg,
                  const rag::VectorIndex& index,
                  const gateway::ModelEndpoint& endpoint,
                  const StopFn& should_stop = nullptr);

} // namespace v2t::pipeline
