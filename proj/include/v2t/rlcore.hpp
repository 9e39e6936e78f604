#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace v2t::rlcore {

// Action liveness flags; empty means every action is live. Retired prompts
// keep their slot so the parameter shape never changes mid-run.
using Mask = std::vector<std::uint8_t>;

struct PolicyShape {
    std::size_t obs_dim = 0;
    std::size_t hidden = 64;
    std::size_t actions = 0;

    std::size_t param_count() const {
        return obs_dim * hidden + hidden + hidden * actions + actions + hidden + 1;
    }
    std::size_t off_w1() const { return 0; }
    std::size_t off_b1() const { return obs_dim * hidden; }
    std::size_t off_wp() const { return off_b1() + hidden; }
    std::size_t off_bp() const { return off_wp() + hidden * actions; }
    std::size_t off_wv() const { return off_bp() + actions; }
    std::size_t off_bv() const { return off_wv() + hidden; }
};

// One hidden ReLU layer shared by the action head and the value head.
// theta_old is replaced only by sync_old, never by gradient steps.
struct PolicyParams {
    PolicyShape shape;
    std::vector<double> theta;
    std::vector<double> theta_old;

    void sync_old() { theta_old = theta; }
};

PolicyParams make_policy(const PolicyShape& shape, std::uint64_t seed);
PolicyParams zero_policy(const PolicyShape& shape);

struct Transition {
    std::vector<double> s;
    std::size_t a = 0;
    double r = 0.0;
    std::vector<double> s_next;
    double logp_old = 0.0;
    std::optional<double> feedback;
    Mask mask;
};

struct PpoConfig {
    double clip_eps = 0.2;
    double lambda = 0.5;
    double gamma = 0.99;
    int epochs = 4;
    std::size_t minibatch = 32;
    std::uint64_t seed = 0;
};

void validate(const PpoConfig& cfg);

struct Forward {
    std::vector<double> probs;
    std::vector<double> logits;
    std::vector<double> hidden;
    std::vector<double> pre;
    double value = 0.0;
};

// Full forward pass under an explicit parameter vector; masked actions get
// probability exactly 0 and are excluded from the softmax.
Forward forward_with(const std::vector<double>& theta,
                     const PolicyShape& shape,
                     const std::vector<double>& s,
                     const Mask& mask = {});

std::vector<double> policy_forward(const std::vector<double>& s,
                                   const PolicyParams& params,
                                   const Mask& mask = {});

double state_value(const std::vector<double>& s, const PolicyParams& params);
double state_value_old(const std::vector<double>& s, const PolicyParams& params);

// One-step estimate r + gamma*V(s') - V(s), both values under theta_old so
// the objective's advantage is a constant w.r.t. theta.
double advantage(const Transition& t, const PolicyParams& params, double gamma);

struct Objective {
    double value = 0.0;
    std::vector<double> grad;
};

// Mean over the batch of min(ratio*A, clip(ratio, 1-eps, 1+eps)*A).
// Trainers ascend this (descend its negation).
Objective ppo_objective(const std::vector<Transition>& batch,
                        const PolicyParams& params,
                        const PpoConfig& cfg);

// PPO term plus lambda*F*logpi(a|s) per transition. With lambda = 0 the
// extra term is skipped entirely, so value and gradient match
// ppo_objective bit for bit.
Objective feedback_objective(const std::vector<Transition>& batch,
                             const PolicyParams& params,
                             const PpoConfig& cfg);

// Mean squared error of V_theta(s) against r + gamma*V_old(s').
Objective value_loss(const std::vector<Transition>& batch,
                     const PolicyParams& params,
                     double gamma);

struct OptimizerState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool bias_correction = false;
    std::uint64_t t = 0;
    std::vector<double> m;
    std::vector<double> v;
};

// theta <- theta - lr * m/(sqrt(v)+eps) after the moment updates. Rejects
// non-finite gradients before touching any state.
void optimizer_step(std::vector<double>& theta,
                    const std::vector<double>& grad,
                    OptimizerState& state);

std::size_t sample_action(const std::vector<double>& dist, std::mt19937_64& rng);

// -sum(target_i * log(max(pred_i, 1e-12))).
double cross_entropy(const std::vector<double>& predicted, const std::vector<double>& target);

struct Checkpoint {
    int version = 1;
    PolicyParams params;
    OptimizerState opt;
    PpoConfig cfg;
    std::uint64_t run_seed = 0;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace v2t::rlcore
