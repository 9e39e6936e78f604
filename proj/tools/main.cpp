#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "v2t/errors.hpp"
#include "v2t/gateway.hpp"
#include "v2t/jsonio.hpp"
#include "v2t/metrics.hpp"
#include "v2t/pipeline.hpp"
#include "v2t/prompts.hpp"
#include "v2t/rag.hpp"
#include "v2t/rlcore.hpp"

namespace fs = std::filesystem;
using namespace v2t;

namespace {

std::string format_csv(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

// Flags shared by run and train; option pointers record what was set.
struct CommonOpts {
    std::string config;
    std::string images;
    std::string prompts;
    std::string kb;
    std::string out = "out";
    std::string backend_url;
    std::uint64_t seed = 0;
    int iterations = 0;
    double lambda = 0.0;
    double clip_eps = 0.0;
    std::uint64_t retention_k = 0;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* iterations_opt = nullptr;
    CLI::Option* lambda_opt = nullptr;
    CLI::Option* clip_opt = nullptr;
    CLI::Option* retention_opt = nullptr;
};

void add_common_flags(CLI::App* sub, CommonOpts& o, bool needs_images) {
    sub->add_option("--config", o.config, "run config JSON file");
    auto* images = sub->add_option("--images", o.images, "image file or directory");
    if (needs_images) images->required();
    sub->add_option("--prompts", o.prompts, "prompt catalog JSONL")->required();
    sub->add_option("--kb", o.kb, "knowledge base JSONL")->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--backend-url", o.backend_url,
                    "remote model service base URL (default: offline mock)");
    o.seed_opt = sub->add_option("--seed", o.seed, "run seed");
    o.iterations_opt = sub->add_option("--iterations", o.iterations, "iteration budget");
    o.lambda_opt = sub->add_option("--lambda", o.lambda, "feedback weight");
    o.clip_opt = sub->add_option("--clip-eps", o.clip_eps, "ppo clip radius");
    o.retention_opt =
        sub->add_option("--retention-k", o.retention_k, "prompts kept per iteration (0 = adaptive)");
}

pipeline::RunConfig load_config_with_overrides(const CommonOpts& o) {
    pipeline::RunConfig cfg;
    if (!o.config.empty()) {
        cfg = pipeline::load_run_config(o.config);
    }
    if (o.seed_opt && o.seed_opt->count()) cfg.seed = o.seed;
    if (o.iterations_opt && o.iterations_opt->count()) cfg.iterations = o.iterations;
    if (o.lambda_opt && o.lambda_opt->count()) cfg.ppo.lambda = o.lambda;
    if (o.clip_opt && o.clip_opt->count()) cfg.ppo.clip_eps = o.clip_eps;
    if (o.retention_opt && o.retention_opt->count()) {
        cfg.retention_k = static_cast<std::size_t>(o.retention_k);
    }
    pipeline::validate(cfg);
    return cfg;
}

gateway::ModelEndpoint make_endpoint(const pipeline::RunConfig& cfg, const std::string& url) {
    gateway::ModelEndpoint ep;
    if (url.empty()) {
        ep.kind = gateway::BackendKind::mock;
        ep.seed = cfg.encoder_seed;
    } else {
        ep.kind = gateway::BackendKind::remote;
        ep.base_url = url;
    }
    return ep;
}

std::vector<std::pair<std::string, std::vector<std::uint8_t>>> load_images_sorted(
    const std::string& path) {
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else if (fs::is_regular_file(path)) {
        files.push_back(path);
    } else {
        throw LoadError(LoadError::Kind::missing_file, "no such image file or directory: " + path);
    }
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> out;
    for (const fs::path& f : files) {
        out.emplace_back(f.filename().string(), read_file_bytes(f));
    }
    if (out.empty()) {
        throw LoadError(LoadError::Kind::empty_file, "no images found in " + path);
    }
    return out;
}

std::string provenance_comment(const pipeline::RunConfig& cfg) {
    std::ostringstream ss;
    ss << "# artifact_version " << pipeline::kArtifactVersion << "\n";
    ss << "# seed " << cfg.seed << "\n";
    ss << "# config " << canonical_dump(pipeline::run_config_to_json(cfg));
    std::string s = ss.str();
    s.push_back('\n');
    return s;
}

struct RunOpts : CommonOpts {
    std::string checkpoint;
    bool fresh = false;
    int jobs = 1;
};

int cmd_run(const RunOpts& o) {
    pipeline::RunConfig cfg;
    prompts::PromptCatalog catalog;
    rag::VectorIndex index;
    rlcore::PolicyParams policy;
    gateway::ModelEndpoint endpoint;
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> images;
    try {
        cfg = load_config_with_overrides(o);
        catalog = prompts::load_catalog(o.prompts);
        endpoint = make_endpoint(cfg, o.backend_url);
        index = rag::build_index(rag::load_knowledge(o.kb), gateway::make_gateway_embedder(endpoint));
        if (!o.checkpoint.empty()) {
            const rlcore::Checkpoint ck = rlcore::load_checkpoint(o.checkpoint);
            policy = ck.params;
            if (policy.shape.actions != catalog.size()) {
                throw DomainError("checkpoint action count does not match catalog size");
            }
        } else if (o.fresh) {
            rlcore::PolicyShape shape;
            shape.obs_dim = 2 * endpoint.embed_dim;
            shape.hidden = 64;
            shape.actions = catalog.size();
            policy = rlcore::make_policy(shape, cfg.seed);
        } else {
            throw DomainError("provide --checkpoint FILE or --fresh");
        }
        images = load_images_sorted(o.images);
        fs::create_directories(o.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        std::vector<pipeline::PipelineResult> results(images.size());
        const int jobs = std::max(1, o.jobs);
        if (jobs == 1) {
            for (std::size_t i = 0; i < images.size(); ++i) {
                results[i] = pipeline::run_pipeline(images[i].second, images[i].first, catalog,
                                                    cfg, policy, index, endpoint);
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
            std::vector<std::thread> workers;
            for (int w = 0; w < jobs; ++w) {
                workers.emplace_back([&, w] {
                    try {
                        for (std::size_t i = next.fetch_add(1); i < images.size();
                             i = next.fetch_add(1)) {
                            results[i] = pipeline::run_pipeline(images[i].second, images[i].first,
                                                                catalog, cfg, policy, index,
                                                                endpoint);
                        }
                    } catch (...) {
                        errors[static_cast<std::size_t>(w)] = std::current_exception();
                    }
                });
            }
            for (std::thread& t : workers) t.join();
            for (const std::exception_ptr& e : errors) {
                if (e) std::rethrow_exception(e);
            }
        }

        std::ostringstream csv;
        csv << provenance_comment(cfg);
        csv << "image,iteration,selected_prompt_id,selected_action,reward,feedback_score,"
               "objective,catalog_size,complete\n";
        bool any_incomplete = false;
        for (std::size_t i = 0; i < images.size(); ++i) {
            const pipeline::ImageReport& rep = results[i].report;
            const fs::path report_path =
                fs::path(o.out) / (fs::path(images[i].first).stem().string() + ".report.json");
            write_file(report_path, canonical_dump(pipeline::report_to_json(rep, cfg), 2));
            for (const pipeline::IterationRecord& r : rep.iterations) {
                csv << rep.image << "," << r.iteration << "," << r.selected_prompt_id << ","
                    << r.selected_action << "," << format_csv(r.reward) << ","
                    << format_csv(r.feedback_score) << "," << format_csv(r.objective) << ","
                    << r.catalog_size << "," << (rep.complete ? "true" : "false") << "\n";
            }
            if (!rep.complete) {
                any_incomplete = true;
                std::cerr << "error: " << rep.image << " failed at stage " << rep.failed_stage
                          << "\n";
            }
        }
        write_file(fs::path(o.out) / "summary.csv", csv.str());
        if (any_incomplete) return 1;
        std::cout << "wrote " << images.size() << " report(s) to " << o.out << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

struct TrainOpts : CommonOpts {
    int max_updates = 0;
    CLI::Option* updates_opt = nullptr;
};

int cmd_train(const TrainOpts& o) {
    pipeline::RunConfig cfg;
    prompts::PromptCatalog catalog;
    rag::VectorIndex index;
    gateway::ModelEndpoint endpoint;
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> images;
    try {
        cfg = load_config_with_overrides(o);
        if (o.updates_opt && o.updates_opt->count()) cfg.max_updates = o.max_updates;
        pipeline::validate(cfg);
        catalog = prompts::load_catalog(o.prompts);
        endpoint = make_endpoint(cfg, o.backend_url);
        index = rag::build_index(rag::load_knowledge(o.kb), gateway::make_gateway_embedder(endpoint));
        images = load_images_sorted(o.images);
        fs::create_directories(o.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        const pipeline::TrainResult res = pipeline::train(images, catalog, cfg, index, endpoint);
        rlcore::Checkpoint ck;
        ck.params = res.policy;
        ck.opt = res.opt;
        ck.cfg = cfg.ppo;
        ck.run_seed = cfg.seed;
        rlcore::save_checkpoint(fs::path(o.out) / "checkpoint.json", ck);

        std::ostringstream csv;
        csv << provenance_comment(cfg);
        csv << "update,objective,mean_reward,mean_feedback\n";
        for (const pipeline::UpdateLog& log : res.log) {
            csv << log.update << "," << format_csv(log.objective) << ","
                << format_csv(log.mean_reward) << "," << format_csv(log.mean_feedback) << "\n";
        }
        write_file(fs::path(o.out) / "training_log.csv", csv.str());
        std::cout << "trained " << res.log.size() << " update(s); checkpoint written to " << o.out
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

struct IndexOpts {
    std::string kb;
    std::string out = "out";
    std::uint64_t encoder_seed = 42;
};

int cmd_index(const IndexOpts& o) {
    rag::VectorIndex index;
    try {
        gateway::ModelEndpoint ep;
        ep.kind = gateway::BackendKind::mock;
        ep.seed = o.encoder_seed;
        index = rag::build_index(rag::load_knowledge(o.kb), gateway::make_gateway_embedder(ep));
        fs::create_directories(o.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        nlohmann::json j;
        j["artifact_version"] = pipeline::kArtifactVersion;
        j["encoder_seed"] = o.encoder_seed;
        j["dim"] = index.dim;
        nlohmann::json docs = nlohmann::json::array();
        for (const rag::KnowledgeDoc& d : index.docs) {
            nlohmann::json doc;
            doc["id"] = d.id;
            doc["text"] = d.text;
            nlohmann::json vals = nlohmann::json::array();
            for (double x : d.embedding.values) vals.push_back(x);
            doc["embedding"] = std::move(vals);
            docs.push_back(std::move(doc));
        }
        j["docs"] = std::move(docs);
        write_file(fs::path(o.out) / "index.json", canonical_dump(j, 2));
        std::cout << "indexed " << index.size() << " document(s) to " << o.out << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

struct EvalOpts {
    std::string originals;
    std::string reconstructed;
    std::string texts;
    std::string recon_emb;
    std::string gallery_emb;
    std::string lexicons;
    std::string out = "out";
};

std::vector<std::pair<std::string, EmbeddingVector>> load_embedding_jsonl(const fs::path& path) {
    std::vector<std::pair<std::string, EmbeddingVector>> out;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("identity") ||
            !j["identity"].is_string() || !j.contains("values") || !j["values"].is_array()) {
            throw LoadError(LoadError::Kind::malformed_line,
                            "embeddings line " + std::to_string(lineno) +
                                ": expected {\"identity\": str, \"values\": [...]}: " +
                                path.string());
        }
        EmbeddingVector e;
        for (const auto& x : j["values"]) {
            if (!x.is_number()) {
                throw LoadError(LoadError::Kind::malformed_line,
                                "embeddings line " + std::to_string(lineno) +
                                    ": non-numeric value");
            }
            e.values.push_back(x.get<double>());
        }
        out.emplace_back(j["identity"].get<std::string>(), std::move(e));
    }
    if (out.empty()) {
        throw LoadError(LoadError::Kind::empty_file, "no embeddings in " + path.string());
    }
    return out;
}

int cmd_eval(const EvalOpts& o) {
    const bool have_images = !o.originals.empty() || !o.reconstructed.empty();
    const bool have_embs = !o.recon_emb.empty() || !o.gallery_emb.empty();
    try {
        if (have_images && (o.originals.empty() || o.reconstructed.empty())) {
            throw DomainError("provide both --originals and --reconstructed");
        }
        if (have_embs && (o.recon_emb.empty() || o.gallery_emb.empty())) {
            throw DomainError("provide both --recon-emb and --gallery-emb");
        }
        if (!have_images && !have_embs && o.texts.empty()) {
            throw DomainError("nothing to evaluate: provide image pairs, embeddings, or texts");
        }
        fs::create_directories(o.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (have_images) {
            std::vector<std::string> names_a, names_b;
            for (const auto& entry : fs::directory_iterator(o.originals)) {
                if (entry.is_regular_file()) names_a.push_back(entry.path().filename().string());
            }
            for (const auto& entry : fs::directory_iterator(o.reconstructed)) {
                if (entry.is_regular_file()) names_b.push_back(entry.path().filename().string());
            }
            std::sort(names_a.begin(), names_a.end());
            std::sort(names_b.begin(), names_b.end());
            std::vector<std::string> only_a, only_b, paired;
            std::set_difference(names_a.begin(), names_a.end(), names_b.begin(), names_b.end(),
                                std::back_inserter(only_a));
            std::set_difference(names_b.begin(), names_b.end(), names_a.begin(), names_a.end(),
                                std::back_inserter(only_b));
            std::set_intersection(names_a.begin(), names_a.end(), names_b.begin(), names_b.end(),
                                  std::back_inserter(paired));
            if (!only_a.empty() || !only_b.empty()) {
                for (const std::string& n : only_a) {
                    std::cerr << "error: unpaired original: " << n << "\n";
                }
                for (const std::string& n : only_b) {
                    std::cerr << "error: unpaired reconstruction: " << n << "\n";
                }
                return 1;
            }
            if (paired.empty()) {
                std::cerr << "error: no image pairs found\n";
                return 1;
            }

            double srra_value = std::numeric_limits<double>::quiet_NaN();
            if (have_embs) {
                const auto recon = load_embedding_jsonl(o.recon_emb);
                const auto gallery_raw = load_embedding_jsonl(o.gallery_emb);
                std::vector<EmbeddingVector> recon_vecs;
                std::vector<std::string> truth;
                for (const auto& [identity, emb] : recon) {
                    truth.push_back(identity);
                    recon_vecs.push_back(emb);
                }
                std::vector<metrics::GalleryEntry> gallery;
                for (const auto& [identity, emb] : gallery_raw) {
                    gallery.push_back({identity, emb});
                }
                srra_value = metrics::srra(recon_vecs, gallery, truth);
            }

            std::ostringstream csv;
            csv << "# artifact_version " << pipeline::kArtifactVersion << "\n";
            csv << "image,ssim,psnr,mse,srra\n";
            double sum_ssim = 0.0, sum_psnr = 0.0, sum_mse = 0.0;
            for (const std::string& name : paired) {
                const metrics::RasterImage a = metrics::load_pnm(fs::path(o.originals) / name);
                const metrics::RasterImage b = metrics::load_pnm(fs::path(o.reconstructed) / name);
                const double s = metrics::ssim(a, b);
                const double p = metrics::psnr(a, b);
                const double m = metrics::mse(a, b);
                sum_ssim += s;
                sum_psnr += p;
                sum_mse += m;
                csv << name << "," << format_csv(s) << "," << format_csv(p) << ","
                    << format_csv(m) << ",-\n";
            }
            const double n = static_cast<double>(paired.size());
            csv << "aggregate," << format_csv(sum_ssim / n) << "," << format_csv(sum_psnr / n)
                << "," << format_csv(sum_mse / n) << ","
                << (std::isnan(srra_value) ? std::string("-") : format_csv(srra_value)) << "\n";
            write_file(fs::path(o.out) / "image_metrics.csv", csv.str());
        } else if (have_embs) {
            const auto recon = load_embedding_jsonl(o.recon_emb);
            const auto gallery_raw = load_embedding_jsonl(o.gallery_emb);
            std::vector<EmbeddingVector> recon_vecs;
            std::vector<std::string> truth;
            for (const auto& [identity, emb] : recon) {
                truth.push_back(identity);
                recon_vecs.push_back(emb);
            }
            std::vector<metrics::GalleryEntry> gallery;
            for (const auto& [identity, emb] : gallery_raw) {
                gallery.push_back({identity, emb});
            }
            const double srra_value = metrics::srra(recon_vecs, gallery, truth);
            std::ostringstream csv;
            csv << "# artifact_version " << pipeline::kArtifactVersion << "\n";
            csv << "image,ssim,psnr,mse,srra\n";
            csv << "aggregate,-,-,-," << format_csv(srra_value) << "\n";
            write_file(fs::path(o.out) / "image_metrics.csv", csv.str());
        }

        if (!o.texts.empty()) {
            const metrics::Lexicons lex = o.lexicons.empty()
                                              ? metrics::default_lexicons()
                                              : metrics::load_lexicons(o.lexicons);
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(o.texts)) {
                if (entry.is_regular_file()) files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            if (files.empty()) {
                std::cerr << "error: no text files in " << o.texts << "\n";
                return 1;
            }
            std::ostringstream csv;
            csv << "# artifact_version " << pipeline::kArtifactVersion << "\n";
            csv << "file,words,unique_words,detail_density,entity_count,modifier_count\n";
            for (const fs::path& f : files) {
                const metrics::TextStats st = metrics::text_stats(read_file(f), lex);
                csv << f.filename().string() << "," << st.words << "," << st.unique_words << ","
                    << format_csv(st.detail_density) << "," << st.entity_count << ","
                    << st.modifier_count << "\n";
            }
            write_file(fs::path(o.out) / "text_metrics.csv", csv.str());
        }
        std::cout << "metrics written to " << o.out << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

struct ReportOpts {
    std::string reports;
    std::string out = "out";
};

int cmd_report(const ReportOpts& o) {
    std::vector<fs::path> files;
    try {
        if (!fs::is_directory(o.reports)) {
            throw LoadError(LoadError::Kind::missing_file,
                            "no such report directory: " + o.reports);
        }
        for (const auto& entry : fs::directory_iterator(o.reports)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            throw LoadError(LoadError::Kind::empty_file, "no report JSON files in " + o.reports);
        }
        fs::create_directories(o.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        std::ostringstream csv;
        csv << "# artifact_version " << pipeline::kArtifactVersion << "\n";
        csv << "image,complete,iterations,mean_reward,mean_feedback,"
               "semantic_similarity_initial_final,words,unique_words,detail_density\n";
        for (const fs::path& f : files) {
            const nlohmann::json j = nlohmann::json::parse(read_file(f), nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                throw LoadError(LoadError::Kind::bad_format, "not a report JSON: " + f.string());
            }
            const std::string image = j.value("image", f.filename().string());
            const bool complete = j.value("complete", false);
            const std::size_t iters = j.contains("iterations") ? j["iterations"].size() : 0;
            csv << image << "," << (complete ? "true" : "false") << "," << iters;
            if (complete && j.contains("metrics")) {
                const auto& m = j["metrics"];
                csv << "," << format_csv(m.value("mean_reward", 0.0)) << ","
                    << format_csv(m.value("mean_feedback", 0.0)) << ","
                    << format_csv(m.value("semantic_similarity_initial_final", 0.0)) << ","
                    << m.value("words", 0) << "," << m.value("unique_words", 0) << ","
                    << format_csv(m.value("detail_density", 0.0)) << "\n";
            } else {
                csv << ",-,-,-,-,-,-\n";
            }
        }
        write_file(fs::path(o.out) / "reports.csv", csv.str());
        std::cout << "aggregated " << files.size() << " report(s) to " << o.out << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"feedback-driven image-to-text privacy pipeline"};
    app.require_subcommand(1);

    RunOpts run_opts;
    CLI::App* run_sub = app.add_subcommand("run", "run the refinement loop over images");
    add_common_flags(run_sub, run_opts, true);
    run_sub->add_option("--checkpoint", run_opts.checkpoint, "policy checkpoint JSON");
    run_sub->add_flag("--fresh", run_opts.fresh, "start from a freshly initialized policy");
    run_sub->add_option("--jobs", run_opts.jobs, "worker threads for per-image parallelism");

    TrainOpts train_opts;
    CLI::App* train_sub = app.add_subcommand("train", "train the prompt-selection policy");
    add_common_flags(train_sub, train_opts, true);
    train_opts.updates_opt =
        train_sub->add_option("--updates", train_opts.max_updates, "policy update count");

    IndexOpts index_opts;
    CLI::App* index_sub = app.add_subcommand("index", "build the retrieval index");
    index_sub->add_option("--kb", index_opts.kb, "knowledge base JSONL")->required();
    index_sub->add_option("--out", index_opts.out, "output directory");
    index_sub->add_option("--encoder-seed", index_opts.encoder_seed, "embedder seed");

    EvalOpts eval_opts;
    CLI::App* eval_sub = app.add_subcommand("eval", "compute image and text metrics");
    eval_sub->add_option("--originals", eval_opts.originals, "directory of original images");
    eval_sub->add_option("--reconstructed", eval_opts.reconstructed,
                         "directory of reconstructed images");
    eval_sub->add_option("--texts", eval_opts.texts, "directory of generated text files");
    eval_sub->add_option("--recon-emb", eval_opts.recon_emb,
                         "reconstructed embeddings JSONL for re-identification");
    eval_sub->add_option("--gallery-emb", eval_opts.gallery_emb, "gallery embeddings JSONL");
    eval_sub->add_option("--lexicons", eval_opts.lexicons, "lexicons JSON for text stats");
    eval_sub->add_option("--out", eval_opts.out, "output directory");

    ReportOpts report_opts;
    CLI::App* report_sub = app.add_subcommand("report", "aggregate run reports into CSV");
    report_sub->add_option("--reports", report_opts.reports, "directory of report JSON files")
        ->required();
    report_sub->add_option("--out", report_opts.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (app.got_subcommand(run_sub)) return cmd_run(run_opts);
    if (app.got_subcommand(train_sub)) return cmd_train(train_opts);
    if (app.got_subcommand(index_sub)) return cmd_index(index_opts);
    if (app.got_subcommand(eval_sub)) return cmd_eval(eval_opts);
    if (app.got_subcommand(report_sub)) return cmd_report(report_opts);
    std::cerr << "error: no subcommand\n";
    return 2;
}
