#include "v2t/rlcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "v2t/errors.hpp"
#include "v2t/jsonio.hpp"
#include "v2t/rng.hpp"

namespace v2t::rlcore {

namespace {

bool is_live(const Mask& mask, std::size_t k) {
    return mask.empty() || mask[k] != 0;
}

void check_transition(const Transition& t, const PolicyShape& shape) {
    if (t.a >= shape.actions) {
        throw DomainError("transition: action index out of range");
    }
    if (!is_live(t.mask, t.a)) {
        throw DomainError("transition: action is masked out");
    }
}

// Accumulates coeff * dlogpi(a|s)/dtheta. The value head gets nothing; the
// trunk is shared, so W1/b1 do.
void accumulate_logpi_grad(const std::vector<double>& theta,
                           const PolicyShape& shape,
                           const Forward& fwd,
                           const std::vector<double>& s,
                           std::size_t a,
                           const Mask& mask,
                           double coeff,
                           std::vector<double>& grad) {
    const std::size_t h = shape.hidden;
    const std::size_t n_act = shape.actions;
    std::vector<double> dhidden(h, 0.0);
    for (std::size_t k = 0; k < n_act; ++k) {
        if (!is_live(mask, k)) continue;
        const double dlogit = (k == a ? 1.0 : 0.0) - fwd.probs[k];
        grad[shape.off_bp() + k] += coeff * dlogit;
        for (std::size_t j = 0; j < h; ++j) {
            grad[shape.off_wp() + j * n_act + k] += coeff * dlogit * fwd.hidden[j];
            dhidden[j] += dlogit * theta[shape.off_wp() + j * n_act + k];
        }
    }
    for (std::size_t j = 0; j < h; ++j) {
        if (fwd.pre[j] <= 0.0) continue;
        const double dz = coeff * dhidden[j];
        grad[shape.off_b1() + j] += dz;
        for (std::size_t i = 0; i < shape.obs_dim; ++i) {
            grad[shape.off_w1() + i * h + j] += dz * s[i];
        }
    }
}

Objective objective_impl(const std::vector<Transition>& batch,
                         const PolicyParams& params,
                         const PpoConfig& cfg,
                         bool with_feedback) {
    validate(cfg);
    if (batch.empty()) {
        throw DomainError("objective: empty batch");
    }
    Objective out;
    out.grad.assign(params.theta.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const double lo = 1.0 - cfg.clip_eps;
    const double hi = 1.0 + cfg.clip_eps;

    for (const Transition& t : batch) {
        check_transition(t, params.shape);
        if (with_feedback && cfg.lambda > 0.0) {
            if (!t.feedback.has_value()) {
                throw DomainError("feedback_objective: lambda > 0 requires a feedback score");
            }
            if (*t.feedback < -1.0 || *t.feedback > 1.0) {
                throw DomainError("feedback_objective: feedback score outside [-1, 1]");
            }
        }
        const Forward fwd = forward_with(params.theta, params.shape, t.s, t.mask);
        const double logp = std::log(fwd.probs[t.a]);
        const double ratio = std::exp(logp - t.logp_old);
        const double adv = advantage(t, params, cfg.gamma);
        const double u = ratio * adv;
        const double c = std::clamp(ratio, lo, hi) * adv;
        out.value += inv_n * std::min(u, c);
        if (u <= c) {
            accumulate_logpi_grad(params.theta, params.shape, fwd, t.s, t.a, t.mask,
                                  inv_n * adv * ratio, out.grad);
        }
        if (with_feedback && cfg.lambda > 0.0 && *t.feedback != 0.0) {
            const double w = cfg.lambda * *t.feedback;
            out.value += inv_n * w * logp;
            accumulate_logpi_grad(params.theta, params.shape, fwd, t.s, t.a, t.mask,
                                  inv_n * w, out.grad);
        }
    }
    return out;
}

} // namespace

void validate(const PpoConfig& cfg) {
    if (!(cfg.clip_eps > 0.0 && cfg.clip_eps < 1.0)) {
        throw DomainError("ppo config: clip radius must be in (0, 1)");
    }
    if (cfg.lambda < 0.0) {
        throw DomainError("ppo config: feedback weight must be >= 0");
    }
    if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) {
        throw DomainError("ppo config: discount must be in [0, 1]");
    }
    if (cfg.epochs < 1 || cfg.minibatch < 1) {
        throw DomainError("ppo config: epochs and minibatch must be >= 1");
    }
}

PolicyParams make_policy(const PolicyShape& shape, std::uint64_t seed) {
    if (shape.obs_dim == 0 || shape.hidden == 0 || shape.actions == 0) {
        throw DomainError("make_policy: all shape dimensions must be positive");
    }
    PolicyParams p;
    p.shape = shape;
    p.theta.assign(shape.param_count(), 0.0);
    std::mt19937_64 rng(seed);
    const double bound_in = 1.0 / std::sqrt(static_cast<double>(shape.obs_dim));
    const double bound_h = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
    for (std::size_t i = 0; i < shape.obs_dim * shape.hidden; ++i) {
        p.theta[shape.off_w1() + i] = uniform_range(rng, -bound_in, bound_in);
    }
    for (std::size_t i = 0; i < shape.hidden * shape.actions; ++i) {
        p.theta[shape.off_wp() + i] = uniform_range(rng, -bound_h, bound_h);
    }
    for (std::size_t i = 0; i < shape.hidden; ++i) {
        p.theta[shape.off_wv() + i] = uniform_range(rng, -bound_h, bound_h);
    }
    p.theta_old = p.theta;
    return p;
}

PolicyParams zero_policy(const PolicyShape& shape) {
    if (shape.obs_dim == 0 || shape.hidden == 0 || shape.actions == 0) {
        throw DomainError("zero_policy: all shape dimensions must be positive");
    }
    PolicyParams p;
    p.shape = shape;
    p.theta.assign(shape.param_count(), 0.0);
    p.theta_old = p.theta;
    return p;
}

Forward forward_with(const std::vector<double>& theta,
                     const PolicyShape& shape,
                     const std::vector<double>& s,
                     const Mask& mask) {
    if (theta.size() != shape.param_count()) {
        throw DomainError("policy: parameter vector size mismatch");
    }
    if (s.size() != shape.obs_dim) {
        throw DomainError("policy: observation dimension mismatch");
    }
    if (!mask.empty() && mask.size() != shape.actions) {
        throw DomainError("policy: mask size mismatch");
    }
    const std::size_t h = shape.hidden;
    const std::size_t n_act = shape.actions;

    Forward f;
    f.pre.resize(h);
    f.hidden.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        double z = theta[shape.off_b1() + j];
        for (std::size_t i = 0; i < shape.obs_dim; ++i) {
            z += s[i] * theta[shape.off_w1() + i * h + j];
        }
        f.pre[j] = z;
        f.hidden[j] = z > 0.0 ? z : 0.0;
    }
    f.logits.resize(n_act);
    for (std::size_t k = 0; k < n_act; ++k) {
        double z = theta[shape.off_bp() + k];
        for (std::size_t j = 0; j < h; ++j) {
            z += f.hidden[j] * theta[shape.off_wp() + j * n_act + k];
        }
        f.logits[k] = z;
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_act; ++k) {
        if (is_live(mask, k) && f.logits[k] > max_logit) max_logit = f.logits[k];
    }
    if (max_logit == -std::numeric_limits<double>::infinity()) {
        throw DomainError("policy: mask leaves no live action");
    }
    f.probs.assign(n_act, 0.0);
    double denom = 0.0;
    for (std::size_t k = 0; k < n_act; ++k) {
        if (!is_live(mask, k)) continue;
        f.probs[k] = std::exp(f.logits[k] - max_logit);
        denom += f.probs[k];
    }
    for (std::size_t k = 0; k < n_act; ++k) {
        if (is_live(mask, k)) f.probs[k] /= denom;
    }
    f.value = theta[shape.off_bv()];
    for (std::size_t j = 0; j < h; ++j) {
        f.value += f.hidden[j] * theta[shape.off_wv() + j];
    }
    return f;
}

std::vector<double> policy_forward(const std::vector<double>& s,
                                   const PolicyParams& params,
                                   const Mask& mask) {
    return forward_with(params.theta, params.shape, s, mask).probs;
}

double state_value(const std::vector<double>& s, const PolicyParams& params) {
    return forward_with(params.theta, params.shape, s).value;
}

double state_value_old(const std::vector<double>& s, const PolicyParams& params) {
    return forward_with(params.theta_old, params.shape, s).value;
}

double advantage(const Transition& t, const PolicyParams& params, double gamma) {
    double q = t.r;
    if (gamma != 0.0) {
        q += gamma * forward_with(params.theta_old, params.shape, t.s_next).value;
    }
    return q - forward_with(params.theta_old, params.shape, t.s).value;
}

Objective ppo_objective(const std::vector<Transition>& batch,
                        const PolicyParams& params,
                        const PpoConfig& cfg) {
    return objective_impl(batch, params, cfg, false);
}

Objective feedback_objective(const std::vector<Transition>& batch,
                             const PolicyParams& params,
                             const PpoConfig& cfg) {
    return objective_impl(batch, params, cfg, true);
}

Objective value_loss(const std::vector<Transition>& batch,
                     const PolicyParams& params,
                     double gamma) {
    if (batch.empty()) {
        throw DomainError("value_loss: empty batch");
    }
    Objective out;
    out.grad.assign(params.theta.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const PolicyShape& shape = params.shape;

    for (const Transition& t : batch) {
        const Forward fwd = forward_with(params.theta, shape, t.s);
        double target = t.r;
        if (gamma != 0.0) {
            target += gamma * forward_with(params.theta_old, shape, t.s_next).value;
        }
        const double diff = fwd.value - target;
        out.value += inv_n * diff * diff;
        const double dv = 2.0 * inv_n * diff;
        out.grad[shape.off_bv()] += dv;
        for (std::size_t j = 0; j < shape.hidden; ++j) {
            out.grad[shape.off_wv() + j] += dv * fwd.hidden[j];
            if (fwd.pre[j] <= 0.0) continue;
            const double dz = dv * params.theta[shape.off_wv() + j];
            out.grad[shape.off_b1() + j] += dz;
            for (std::size_t i = 0; i < shape.obs_dim; ++i) {
                out.grad[shape.off_w1() + i * shape.hidden + j] += dz * t.s[i];
            }
        }
    }
    return out;
}

void optimizer_step(std::vector<double>& theta,
                    const std::vector<double>& grad,
                    OptimizerState& state) {
    if (grad.size() != theta.size()) {
        throw DomainError("optimizer_step: gradient size mismatch");
    }
    for (double g : grad) {
        if (!std::isfinite(g)) {
            throw TrainingError("optimizer_step: non-finite gradient, step rejected");
        }
    }
    if (state.m.empty()) state.m.assign(theta.size(), 0.0);
    if (state.v.empty()) state.v.assign(theta.size(), 0.0);
    if (state.m.size() != theta.size() || state.v.size() != theta.size()) {
        throw DomainError("optimizer_step: moment size mismatch");
    }
    state.t += 1;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        double mhat = state.m[i];
        double vhat = state.v[i];
        if (state.bias_correction) {
            mhat /= 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
            vhat /= 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
        }
        theta[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

std::size_t sample_action(const std::vector<double>& dist, std::mt19937_64& rng) {
    if (dist.empty()) {
        throw DomainError("sample_action: empty distribution");
    }
    double total = 0.0;
    for (double p : dist) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw DomainError("sample_action: invalid probability");
        }
        total += p;
    }
    if (total <= 0.0) {
        throw DomainError("sample_action: zero-mass distribution");
    }
    const double u = uniform_unit(rng) * total;
    double cum = 0.0;
    std::size_t last = 0;
    bool seen = false;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 0.0) continue;
        cum += dist[i];
        last = i;
        seen = true;
        if (u < cum) return i;
    }
    (void)seen;
    return last;
}

double cross_entropy(const std::vector<double>& predicted, const std::vector<double>& target) {
    if (predicted.size() != target.size()) {
        throw DomainError("cross_entropy: size mismatch");
    }
    if (predicted.empty()) {
        throw DomainError("cross_entropy: empty input");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        loss -= target[i] * std::log(std::max(predicted[i], 1e-12));
    }
    return loss;
}

namespace {

nlohmann::json vec_to_json(const std::vector<double>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) arr.push_back(x);
    return arr;
}

std::vector<double> vec_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) {
        throw LoadError(LoadError::Kind::bad_format, std::string("checkpoint: ") + what +
                                                         " must be an array");
    }
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& x : j) {
        if (!x.is_number()) {
            throw LoadError(LoadError::Kind::bad_format, std::string("checkpoint: ") + what +
                                                             " must hold numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

} // namespace

nlohmann::json checkpoint_to_json(const Checkpoint& ck) {
    nlohmann::json j;
    j["version"] = ck.version;
    j["run_seed"] = ck.run_seed;
    j["shape"] = {{"obs_dim", ck.params.shape.obs_dim},
                  {"hidden", ck.params.shape.hidden},
                  {"actions", ck.params.shape.actions}};
    j["theta"] = vec_to_json(ck.params.theta);
    j["theta_old"] = vec_to_json(ck.params.theta_old);
    j["opt"] = {{"lr", ck.opt.lr},
                {"beta1", ck.opt.beta1},
                {"beta2", ck.opt.beta2},
                {"eps", ck.opt.eps},
                {"bias_correction", ck.opt.bias_correction},
                {"t", ck.opt.t},
                {"m", vec_to_json(ck.opt.m)},
                {"v", vec_to_json(ck.opt.v)}};
    j["cfg"] = {{"clip_eps", ck.cfg.clip_eps},
                {"lambda", ck.cfg.lambda},
                {"gamma", ck.cfg.gamma},
                {"epochs", ck.cfg.epochs},
                {"minibatch", ck.cfg.minibatch},
                {"seed", ck.cfg.seed}};
    return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer()) {
        throw LoadError(LoadError::Kind::bad_format, "checkpoint: missing version");
    }
    Checkpoint ck;
    ck.version = j["version"].get<int>();
    if (ck.version != 1) {
        throw LoadError(LoadError::Kind::bad_format,
                        "checkpoint: unsupported version " + std::to_string(ck.version));
    }
    try {
        ck.run_seed = j.at("run_seed").get<std::uint64_t>();
        const auto& sh = j.at("shape");
        ck.params.shape.obs_dim = sh.at("obs_dim").get<std::size_t>();
        ck.params.shape.hidden = sh.at("hidden").get<std::size_t>();
        ck.params.shape.actions = sh.at("actions").get<std::size_t>();
        ck.params.theta = vec_from_json(j.at("theta"), "theta");
        ck.params.theta_old = vec_from_json(j.at("theta_old"), "theta_old");
        const auto& opt = j.at("opt");
        ck.opt.lr = opt.at("lr").get<double>();
        ck.opt.beta1 = opt.at("beta1").get<double>();
        ck.opt.beta2 = opt.at("beta2").get<double>();
        ck.opt.eps = opt.at("eps").get<double>();
        ck.opt.bias_correction = opt.at("bias_correction").get<bool>();
        ck.opt.t = opt.at("t").get<std::uint64_t>();
        ck.opt.m = vec_from_json(opt.at("m"), "opt.m");
        ck.opt.v = vec_from_json(opt.at("v"), "opt.v");
        const auto& cfg = j.at("cfg");
        ck.cfg.clip_eps = cfg.at("clip_eps").get<double>();
        ck.cfg.lambda = cfg.at("lambda").get<double>();
        ck.cfg.gamma = cfg.at("gamma").get<double>();
        ck.cfg.epochs = cfg.at("epochs").get<int>();
        ck.cfg.minibatch = cfg.at("minibatch").get<std::size_t>();
        ck.cfg.seed = cfg.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(LoadError::Kind::bad_format,
                        std::string("checkpoint: malformed field: ") + e.what());
    }
    if (ck.params.theta.size() != ck.params.shape.param_count() ||
        ck.params.theta_old.size() != ck.params.shape.param_count()) {
        throw LoadError(LoadError::Kind::bad_format, "checkpoint: parameter size mismatch");
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    write_file(path, canonical_dump(checkpoint_to_json(ck)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) {
        throw LoadError(LoadError::Kind::bad_format, "checkpoint: not valid JSON: " + path.string());
    }
    return checkpoint_from_json(j);
}

} // namespace v2t::rlcore
