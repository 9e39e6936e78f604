#include "v2t/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "v2t/errors.hpp"
#include "v2t/jsonio.hpp"
#include "v2t/rng.hpp"

namespace v2t::pipeline {

void validate(const RunConfig& cfg) {
    if (cfg.iterations < 1) {
        throw DomainError("config: iterations must be >= 1");
    }
    if (cfg.batch_episodes < 1) {
        throw DomainError("config: batch_episodes must be >= 1");
    }
    if (cfg.max_updates < 0) {
        throw DomainError("config: max_updates must be >= 0");
    }
    if (cfg.feedback_margin < 0.0) {
        throw DomainError("config: feedback_margin must be >= 0");
    }
    if (cfg.value_coef < 0.0) {
        throw DomainError("config: value_coef must be >= 0");
    }
    if (cfg.algo != "feedback" && cfg.algo != "ppo") {
        throw DomainError("config: algo must be \"feedback\" or \"ppo\"");
    }
    if (cfg.opt.lr < 0.0 || cfg.opt.beta1 < 0.0 || cfg.opt.beta1 >= 1.0 ||
        cfg.opt.beta2 < 0.0 || cfg.opt.beta2 >= 1.0 || cfg.opt.eps <= 0.0) {
        throw DomainError("config: optimizer parameters out of range");
    }
    rlcore::validate(cfg.ppo);
}

namespace {

void reject_unknown_keys(const nlohmann::json& j,
                         const std::set<std::string>& allowed,
                         const char* scope) {
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            throw LoadError(LoadError::Kind::bad_format, std::string("config: unknown key \"") +
                                                             item.key() + "\" in " + scope);
        }
    }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out, bool (nlohmann::json::*check)()
                                                                      const,
                const char* type_name, const char* scope) {
    if (!j.contains(key)) return;
    if (!(j[key].*check)()) {
        throw LoadError(LoadError::Kind::bad_format, std::string("config: \"") + key + "\" in " +
                                                         scope + " must be " + type_name);
    }
    out = j[key].get<T>();
}

void read_number(const nlohmann::json& j, const char* key, double& out, const char* scope) {
    read_field(j, key, out, &nlohmann::json::is_number, "a number", scope);
}

void read_int(const nlohmann::json& j, const char* key, int& out, const char* scope) {
    read_field(j, key, out, &nlohmann::json::is_number_integer, "an integer", scope);
}

void read_uint(const nlohmann::json& j, const char* key, std::uint64_t& out, const char* scope) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_unsigned() && !j[key].is_number_integer()) {
        throw LoadError(LoadError::Kind::bad_format, std::string("config: \"") + key + "\" in " +
                                                         scope + " must be a non-negative integer");
    }
    if (j[key].is_number_integer() && j[key].get<std::int64_t>() < 0) {
        throw LoadError(LoadError::Kind::bad_format,
                        std::string("config: \"") + key + "\" in " + scope + " must be >= 0");
    }
    out = j[key].get<std::uint64_t>();
}

void read_size(const nlohmann::json& j, const char* key, std::size_t& out, const char* scope) {
    std::uint64_t v = out;
    read_uint(j, key, v, scope);
    out = static_cast<std::size_t>(v);
}

void read_string(const nlohmann::json& j, const char* key, std::string& out, const char* scope) {
    read_field(j, key, out, &nlohmann::json::is_string, "a string", scope);
}

void read_bool(const nlohmann::json& j, const char* key, bool& out, const char* scope) {
    read_field(j, key, out, &nlohmann::json::is_boolean, "a boolean", scope);
}

} // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    const nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw LoadError(LoadError::Kind::bad_format, "config: not a JSON object: " + path.string());
    }
    reject_unknown_keys(j,
                        {"iterations", "seed", "retention_k", "feedback_margin", "initial_prompt",
                         "batch_episodes", "max_updates", "value_coef", "algo", "encoder_seed",
                         "optimizer", "ppo"},
                        "the top level");
    RunConfig cfg;
    read_int(j, "iterations", cfg.iterations, "the top level");
    read_uint(j, "seed", cfg.seed, "the top level");
    read_size(j, "retention_k", cfg.retention_k, "the top level");
    read_number(j, "feedback_margin", cfg.feedback_margin, "the top level");
    read_string(j, "initial_prompt", cfg.initial_prompt, "the top level");
    read_int(j, "batch_episodes", cfg.batch_episodes, "the top level");
    read_int(j, "max_updates", cfg.max_updates, "the top level");
    read_number(j, "value_coef", cfg.value_coef, "the top level");
    read_string(j, "algo", cfg.algo, "the top level");
    read_uint(j, "encoder_seed", cfg.encoder_seed, "the top level");
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        if (!o.is_object()) {
            throw LoadError(LoadError::Kind::bad_format, "config: \"optimizer\" must be an object");
        }
        reject_unknown_keys(o, {"learning_rate", "beta1", "beta2", "epsilon", "bias_correction"},
                            "\"optimizer\"");
        read_number(o, "learning_rate", cfg.opt.lr, "\"optimizer\"");
        read_number(o, "beta1", cfg.opt.beta1, "\"optimizer\"");
        read_number(o, "beta2", cfg.opt.beta2, "\"optimizer\"");
        read_number(o, "epsilon", cfg.opt.eps, "\"optimizer\"");
        read_bool(o, "bias_correction", cfg.opt.bias_correction, "\"optimizer\"");
    }
    if (j.contains("ppo")) {
        const auto& p = j["ppo"];
        if (!p.is_object()) {
            throw LoadError(LoadError::Kind::bad_format, "config: \"ppo\" must be an object");
        }
        reject_unknown_keys(p, {"clip_eps", "lambda", "gamma", "epochs", "minibatch", "seed"},
                            "\"ppo\"");
        read_number(p, "clip_eps", cfg.ppo.clip_eps, "\"ppo\"");
        read_number(p, "lambda", cfg.ppo.lambda, "\"ppo\"");
        read_number(p, "gamma", cfg.ppo.gamma, "\"ppo\"");
        read_int(p, "epochs", cfg.ppo.epochs, "\"ppo\"");
        read_size(p, "minibatch", cfg.ppo.minibatch, "\"ppo\"");
        read_uint(p, "seed", cfg.ppo.seed, "\"ppo\"");
    }
    validate(cfg);
    return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["iterations"] = cfg.iterations;
    j["seed"] = cfg.seed;
    j["retention_k"] = cfg.retention_k;
    j["feedback_margin"] = cfg.feedback_margin;
    j["initial_prompt"] = cfg.initial_prompt;
    j["batch_episodes"] = cfg.batch_episodes;
    j["max_updates"] = cfg.max_updates;
    j["value_coef"] = cfg.value_coef;
    j["algo"] = cfg.algo;
    j["encoder_seed"] = cfg.encoder_seed;
    j["optimizer"] = {{"learning_rate", cfg.opt.lr},
                      {"beta1", cfg.opt.beta1},
                      {"beta2", cfg.opt.beta2},
                      {"epsilon", cfg.opt.eps},
                      {"bias_correction", cfg.opt.bias_correction}};
    j["ppo"] = {{"clip_eps", cfg.ppo.clip_eps},
                {"lambda", cfg.ppo.lambda},
                {"gamma", cfg.ppo.gamma},
                {"epochs", cfg.ppo.epochs},
                {"minibatch", cfg.ppo.minibatch},
                {"seed", cfg.ppo.seed}};
    return j;
}

double compute_reward(std::size_t selected, const std::vector<prompts::RankedPrompt>& ranked) {
    for (const prompts::RankedPrompt& r : ranked) {
        if (r.index == selected) return r.score;
    }
    throw DomainError("compute_reward: selected prompt not present in ranking");
}

namespace {

// Text embedding concatenated with the normalized mean prompt embedding.
std::vector<double> observation_of(const EmbeddingVector& text_emb,
                                   const std::vector<EmbeddingVector>& prompt_embs) {
    const std::size_t d = text_emb.values.size();
    std::vector<double> mean(d, 0.0);
    for (const EmbeddingVector& e : prompt_embs) {
        if (e.values.size() != d) {
            throw DomainError("observation: prompt embedding dimension mismatch");
        }
        for (std::size_t i = 0; i < d; ++i) mean[i] += e.values[i];
    }
    for (double& x : mean) x /= static_cast<double>(prompt_embs.size());
    const double norm = l2_norm(mean);
    if (norm > 0.0) {
        for (double& x : mean) x /= norm;
    }
    std::vector<double> obs;
    obs.reserve(2 * d);
    obs.insert(obs.end(), text_emb.values.begin(), text_emb.values.end());
    obs.insert(obs.end(), mean.begin(), mean.end());
    return obs;
}

rlcore::Mask mask_of(const std::vector<std::size_t>& live, std::size_t total) {
    rlcore::Mask mask(total, 0);
    for (std::size_t id : live) mask[id] = 1;
    return mask;
}

rlcore::Objective run_objective(const std::vector<rlcore::Transition>& batch,
                                const rlcore::PolicyParams& policy,
                                const RunConfig& cfg) {
    return cfg.algo == "feedback" ? rlcore::feedback_objective(batch, policy, cfg.ppo)
                                  : rlcore::ppo_objective(batch, policy, cfg.ppo);
}

} // namespace

IterationState init_state(const prompts::PromptCatalog& catalog,
                          const RunConfig& cfg,
                          const std::string& digest,
                          const std::string& episode_tag,
                          const EmbedFn& embedder) {
    IterationState st;
    st.catalog = catalog;
    st.total_actions = catalog.size();
    st.live.resize(catalog.size());
    std::iota(st.live.begin(), st.live.end(), 0);
    st.prompt_embeddings.reserve(catalog.size());
    for (const prompts::PromptEntry& e : catalog.entries) {
        try {
            st.prompt_embeddings.push_back(embedder(e.text));
        } catch (const TransportError& ex) {
            throw IterationError("embed", ex.what());
        } catch (const ProtocolError& ex) {
            throw IterationError("embed", ex.what());
        } catch (const BackendError& ex) {
            throw IterationError("embed", ex.what());
        }
    }
    st.caption_prompt = cfg.initial_prompt;
    st.rng.seed(fnv1a64(std::to_string(cfg.seed) + ":" + digest + ":" + episode_tag));
    return st;
}

IterationOutcome run_iteration(IterationState& state,
                               rlcore::PolicyParams& policy,
                               rlcore::OptimizerState& update_opt,
                               const rag::VectorIndex& index,
                               const gateway::ModelEndpoint& endpoint,
                               const std::vector<std::uint8_t>& image,
                               const RunConfig& cfg) {
    gateway::CaptionRecord cap;
    try {
        cap = gateway::caption(image, state.caption_prompt, endpoint);
    } catch (const TransportError& e) {
        throw IterationError("caption", e.what());
    } catch (const ProtocolError& e) {
        throw IterationError("caption", e.what());
    } catch (const BackendError& e) {
        throw IterationError("caption", e.what());
    }
    state.text = cap.caption;

    bool applied = false;
    if (state.feedback) {
        const std::vector<rlcore::Transition> pu{*state.pending_update};
        const rlcore::Objective obj = run_objective(pu, policy, cfg);
        std::vector<double> grad(obj.grad.size());
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = -obj.grad[i];
        rlcore::optimizer_step(policy.theta, grad, update_opt);
        policy.sync_old();
        state.pending_update.reset();
        state.feedback = false;
        applied = true;
    }

    EmbeddingVector text_emb;
    try {
        text_emb = gateway::embed(state.text, endpoint);
    } catch (const TransportError& e) {
        throw IterationError("embed", e.what());
    } catch (const ProtocolError& e) {
        throw IterationError("embed", e.what());
    } catch (const BackendError& e) {
        throw IterationError("embed", e.what());
    }

    const std::vector<prompts::RankedPrompt> ranked =
        prompts::rank_against(text_emb, state.prompt_embeddings);
    state.observation = observation_of(text_emb, state.prompt_embeddings);

    const rlcore::Mask mask = mask_of(state.live, state.total_actions);
    const std::vector<double> dist = rlcore::policy_forward(state.observation, policy, mask);
    const std::size_t action = rlcore::sample_action(dist, state.rng);
    std::size_t pos = state.live.size();
    for (std::size_t p = 0; p < state.live.size(); ++p) {
        if (state.live[p] == action) {
            pos = p;
            break;
        }
    }
    if (pos == state.live.size()) {
        throw DomainError("run_iteration: sampled a retired action");
    }
    const double logp_old = std::log(dist[action]);
    const double reward = compute_reward(pos, ranked);

    const std::size_t n = state.catalog.size();
    const std::size_t k = cfg.retention_k == 0 ? prompts::default_retention(n)
                                               : std::min(cfg.retention_k, n);
    const std::vector<std::size_t> keep = prompts::retained_positions(ranked, k);
    prompts::PromptCatalog new_catalog = prompts::update_prompt_list(state.catalog, ranked, k);
    std::vector<std::size_t> new_live;
    std::vector<EmbeddingVector> new_embs;
    new_live.reserve(keep.size());
    new_embs.reserve(keep.size());
    for (std::size_t p : keep) {
        new_live.push_back(state.live[p]);
        new_embs.push_back(state.prompt_embeddings[p]);
    }

    const std::vector<double> obs_next = observation_of(text_emb, new_embs);

    rag::Retrieved hit;
    const double f = rag::feedback_for(text_emb, index, &hit);

    rlcore::Transition tr;
    tr.s = state.observation;
    tr.a = action;
    tr.r = reward;
    tr.s_next = obs_next;
    tr.logp_old = logp_old;
    tr.feedback = f;
    tr.mask = mask;
    const rlcore::Objective obj = run_objective({tr}, policy, cfg);

    bool triggered = false;
    if (f > reward + cfg.feedback_margin) {
        const EmbeddingVector& doc_emb = index.docs[hit.position].embedding;
        std::size_t best = 0;
        double best_score = cosine(doc_emb, new_embs[0]);
        for (std::size_t p = 1; p < new_embs.size(); ++p) {
            const double s = cosine(doc_emb, new_embs[p]);
            if (s > best_score) {
                best_score = s;
                best = p;
            }
        }
        const rlcore::Mask new_mask = mask_of(new_live, state.total_actions);
        const std::vector<double> dist_next =
            rlcore::policy_forward(obs_next, policy, new_mask);
        rlcore::Transition pu;
        pu.s = obs_next;
        pu.a = new_live[best];
        pu.r = f;
        pu.s_next = obs_next;
        pu.logp_old = std::log(dist_next[pu.a]);
        pu.feedback = f;
        pu.mask = new_mask;
        state.pending_update = std::move(pu);
        state.feedback = true;
        triggered = true;
    }

    IterationOutcome out;
    out.transition = std::move(tr);
    out.record.iteration = state.i;
    out.record.caption = state.text;
    out.record.selected_prompt_id = state.catalog.entries[pos].id;
    out.record.selected_action = action;
    out.record.reward = reward;
    out.record.feedback_score = f;
    out.record.retrieved_doc = hit.id;
    out.record.feedback_applied = applied;
    out.record.feedback_triggered = triggered;
    out.record.objective = obj.value;
    out.record.catalog_size = new_catalog.size();

    state.caption_prompt = state.catalog.entries[pos].text;
    state.catalog = std::move(new_catalog);
    state.live = std::move(new_live);
    state.prompt_embeddings = std::move(new_embs);
    state.observation = obs_next;
    state.i += 1;
    return out;
}

PipelineResult run_pipeline(const std::vector<std::uint8_t>& image,
                            const std::string& label,
                            const prompts::PromptCatalog& catalog,
                            const RunConfig& cfg,
                            rlcore::PolicyParams policy,
                            const rag::VectorIndex& index,
                            const gateway::ModelEndpoint& endpoint,
                            const std::string& episode_tag) {
    validate(cfg);
    gateway::validate(endpoint);
    if (image.empty()) {
        throw DomainError("run_pipeline: empty image");
    }
    if (catalog.entries.empty()) {
        throw DomainError("run_pipeline: empty catalog");
    }
    if (policy.shape.actions != catalog.size()) {
        throw DomainError("run_pipeline: policy action count does not match catalog size");
    }
    if (policy.shape.obs_dim != 2 * endpoint.embed_dim) {
        throw DomainError("run_pipeline: policy observation dim must be twice the embedding dim");
    }

    PipelineResult result;
    ImageReport& rep = result.report;
    rep.image = label;
    rep.digest = gateway::image_digest(image);

    const EmbedFn embedder = gateway::make_gateway_embedder(endpoint);
    rlcore::OptimizerState update_opt = cfg.opt;

    try {
        IterationState st = init_state(catalog, cfg, rep.digest, episode_tag, embedder);
        for (int i = 1; i <= cfg.iterations; ++i) {
            IterationOutcome out =
                run_iteration(st, policy, update_opt, index, endpoint, image, cfg);
            rep.iterations.push_back(std::move(out.record));
            result.transitions.push_back(std::move(out.transition));
        }
        rep.initial_caption = rep.iterations.front().caption;
        rep.final_text = rep.iterations.back().caption;
        rep.final_stats = metrics::text_stats(rep.final_text, metrics::default_lexicons());
        try {
            rep.semantic_initial_final =
                metrics::semantic_similarity(rep.initial_caption, rep.final_text, embedder);
        } catch (const TransportError& e) {
            throw IterationError("metrics", e.what());
        } catch (const ProtocolError& e) {
            throw IterationError("metrics", e.what());
        } catch (const BackendError& e) {
            throw IterationError("metrics", e.what());
        }
    } catch (const IterationError& e) {
        rep.complete = false;
        rep.failed_stage = e.stage;
        if (!rep.iterations.empty()) {
            rep.initial_caption = rep.iterations.front().caption;
            rep.final_text = rep.iterations.back().caption;
        }
    }

    if (!rep.iterations.empty()) {
        double sum_r = 0.0, sum_f = 0.0;
        for (const IterationRecord& r : rep.iterations) {
            sum_r += r.reward;
            sum_f += r.feedback_score;
        }
        rep.mean_reward = sum_r / static_cast<double>(rep.iterations.size());
        rep.mean_feedback = sum_f / static_cast<double>(rep.iterations.size());
    }
    return result;
}

nlohmann::json report_to_json(const ImageReport& rep, const RunConfig& cfg) {
    nlohmann::json j;
    j["artifact_version"] = kArtifactVersion;
    j["image"] = rep.image;
    j["digest"] = rep.digest;
    j["seed"] = cfg.seed;
    j["config"] = run_config_to_json(cfg);
    j["complete"] = rep.complete;
    if (!rep.complete) {
        j["failed_stage"] = rep.failed_stage;
    }
    j["initial_caption"] = rep.initial_caption;
    j["final_text"] = rep.final_text;
    nlohmann::json iters = nlohmann::json::array();
    for (const IterationRecord& r : rep.iterations) {
        nlohmann::json it;
        it["iteration"] = r.iteration;
        it["caption"] = r.caption;
        it["selected_prompt_id"] = r.selected_prompt_id;
        it["selected_action"] = r.selected_action;
        it["reward"] = r.reward;
        it["feedback_score"] = r.feedback_score;
        it["retrieved_doc"] = r.retrieved_doc;
        it["feedback_applied"] = r.feedback_applied;
        it["feedback_triggered"] = r.feedback_triggered;
        it["objective"] = r.objective;
        it["catalog_size"] = r.catalog_size;
        iters.push_back(std::move(it));
    }
    j["iterations"] = std::move(iters);
    if (rep.complete) {
        j["metrics"] = {{"words", rep.final_stats.words},
                        {"unique_words", rep.final_stats.unique_words},
                        {"detail_density", rep.final_stats.detail_density},
                        {"entity_count", rep.final_stats.entity_count},
                        {"modifier_count", rep.final_stats.modifier_count},
                        {"semantic_similarity_initial_final", rep.semantic_initial_final},
                        {"mean_reward", rep.mean_reward},
                        {"mean_feedback", rep.mean_feedback}};
    }
    return j;
}

namespace {

void fisher_yates(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t pick = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[pick]);
    }
}

} // namespace

TrainResult train(const std::vector<std::pair<std::string, std::vector<std::uint8_t>>>& images,
                  const prompts::PromptCatalog& catalog,
                  const RunConfig& cfg,
                  const rag::VectorIndex& index,
                  const gateway::ModelEndpoint& endpoint,
                  const StopFn& should_stop) {
    validate(cfg);
    gateway::validate(endpoint);
    if (images.empty()) {
        throw DomainError("train: empty dataset");
    }
    if (catalog.entries.empty()) {
        throw DomainError("train: empty catalog");
    }

    TrainResult res;
    rlcore::PolicyShape shape;
    shape.obs_dim = 2 * endpoint.embed_dim;
    shape.hidden = 64;
    shape.actions = catalog.size();
    res.policy = rlcore::make_policy(shape, cfg.seed);
    res.opt = cfg.opt;

    std::size_t episode_counter = 0;
    for (int update = 0; update < cfg.max_updates; ++update) {
        res.policy.sync_old();
        std::vector<rlcore::Transition> batch;
        double sum_r = 0.0, sum_f = 0.0;
        for (int e = 0; e < cfg.batch_episodes; ++e) {
            const auto& [label, bytes] = images[episode_counter % images.size()];
            const std::string tag = "ep" + std::to_string(episode_counter);
            ++episode_counter;
            PipelineResult pr =
                run_pipeline(bytes, label, catalog, cfg, res.policy, index, endpoint, tag);
            if (!pr.report.complete) {
                throw TrainingError("train: episode failed at stage " + pr.report.failed_stage);
            }
            for (rlcore::Transition& t : pr.transitions) {
                sum_r += t.r;
                if (t.feedback) sum_f += *t.feedback;
                batch.push_back(std::move(t));
            }
        }

        std::mt19937_64 shuffle_rng(
            fnv1a64(std::to_string(cfg.seed) + ":update:" + std::to_string(update)));
        std::vector<std::size_t> order(batch.size());
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < cfg.ppo.epochs; ++epoch) {
            fisher_yates(order, shuffle_rng);
            for (std::size_t start = 0; start < order.size(); start += cfg.ppo.minibatch) {
                const std::size_t stop = std::min(order.size(), start + cfg.ppo.minibatch);
                std::vector<rlcore::Transition> mb;
                mb.reserve(stop - start);
                for (std::size_t idx = start; idx < stop; ++idx) mb.push_back(batch[order[idx]]);
                const rlcore::Objective obj = run_objective(mb, res.policy, cfg);
                const rlcore::Objective vl = rlcore::value_loss(mb, res.policy, cfg.ppo.gamma);
                std::vector<double> grad(obj.grad.size());
                for (std::size_t i = 0; i < grad.size(); ++i) {
                    grad[i] = -obj.grad[i] + cfg.value_coef * vl.grad[i];
                }
                rlcore::optimizer_step(res.policy.theta, grad, res.opt);
            }
        }

        const rlcore::Objective final_obj = run_objective(batch, res.policy, cfg);
        UpdateLog log;
        log.update = static_cast<std::size_t>(update);
        log.objective = final_obj.value;
        log.mean_reward = sum_r / static_cast<double>(batch.size());
        log.mean_feedback = sum_f / static_cast<double>(batch.size());
        res.log.push_back(log);
        if (should_stop) {
            TrainProgress progress{log.update, log.objective, log.mean_reward, log.mean_feedback,
                                   res.policy};
            if (should_stop(progress)) break;
        }
    }
    return res;
}

} // namespace v2t::pipeline
