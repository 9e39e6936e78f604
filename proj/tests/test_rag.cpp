#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "v2t/errors.hpp"
#include "v2t/jsonio.hpp"
#include "v2t/rag.hpp"
#include "v2t/rng.hpp"
#include "v2t/textenc.hpp"

using namespace v2t;
using namespace v2t::rag;

namespace {

std::filesystem::path fixtures_dir() { return V2T_FIXTURES_DIR; }

EmbeddingVector vec(std::vector<double> v) { return {std::move(v), false}; }

VectorIndex synthetic_index(std::vector<std::vector<double>> rows) {
    std::vector<KnowledgeDoc> docs;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        docs.push_back({"d" + std::to_string(i), "text " + std::to_string(i),
                        vec(std::move(rows[i]))});
    }
    return build_index_from_embeddings(std::move(docs));
}

} // namespace

TEST_CASE("load_knowledge reads the fixture base") {
    const auto docs = load_knowledge(fixtures_dir() / "kb" / "knowledge.jsonl");
    REQUIRE(docs.size() == 6);
    CHECK(docs[0].first == "k01");
    CHECK(docs[0].second == "a red car waiting at the busy junction under heavy rain");
    CHECK(docs[5].first == "k06");
}

TEST_CASE("load_knowledge error paths") {
    try {
        load_knowledge("/nonexistent/kb.jsonl");
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(e.kind == LoadError::Kind::missing_file);
    }
    const std::filesystem::path bad = std::filesystem::temp_directory_path() / "v2t_kb_bad.jsonl";
    write_file(bad, "{\"id\": \"a\", \"text\": \"t\"}\n{broken\n");
    try {
        load_knowledge(bad);
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(e.kind == LoadError::Kind::malformed_line);
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
    const std::filesystem::path empty = std::filesystem::temp_directory_path() / "v2t_kb_empty.jsonl";
    write_file(empty, "\n");
    try {
        load_knowledge(empty);
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(e.kind == LoadError::Kind::empty_file);
    }
}

TEST_CASE("build_index embeds documents at the shared dimension") {
    const auto docs = load_knowledge(fixtures_dir() / "kb" / "knowledge.jsonl");
    const VectorIndex index = build_index(docs, textenc::make_embedder(42));
    CHECK(index.size() == 6);
    CHECK(index.dim == 64);
    for (const KnowledgeDoc& d : index.docs) {
        CHECK(d.embedding.values.size() == 64);
        double n = 0.0;
        for (double x : d.embedding.values) n += x * x;
        CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(build_index({}, textenc::make_embedder(42)), LoadError);
}

TEST_CASE("build_index_from_embeddings validates ids and dimensions") {
    CHECK_THROWS_AS(build_index_from_embeddings({}), LoadError);
    std::vector<KnowledgeDoc> dup{
        {"a", "t", vec({1.0, 0.0})},
        {"a", "u", vec({0.0, 1.0})},
    };
    CHECK_THROWS_AS(build_index_from_embeddings(std::move(dup)), LoadError);
    std::vector<KnowledgeDoc> mismatch{
        {"a", "t", vec({1.0, 0.0})},
        {"b", "u", vec({0.0, 1.0, 0.0})},
    };
    CHECK_THROWS_AS(build_index_from_embeddings(std::move(mismatch)), DomainError);
}

TEST_CASE("mips_retrieve returns the highest inner product") {
    const VectorIndex index = synthetic_index({
        {0.0, 1.0},
        {1.0, 0.0},
        {0.6, 0.8},
    });
    const Retrieved hit = mips_retrieve(vec({1.0, 0.0}), index);
    CHECK(hit.id == "d1");
    CHECK(hit.position == 1);
    CHECK(hit.score == doctest::Approx(1.0));
}

TEST_CASE("mips_retrieve ties go to the lowest position") {
    const VectorIndex index = synthetic_index({
        {1.0, 0.0},
        {0.0, 1.0},
        {1.0, 0.0},
    });
    const Retrieved hit = mips_retrieve(vec({1.0, 0.0}), index);
    CHECK(hit.position == 0);
}

TEST_CASE("mips_retrieve input validation") {
    const VectorIndex index = synthetic_index({{1.0, 0.0}});
    CHECK_THROWS_AS(mips_retrieve(vec({1.0, 0.0, 0.0}), index), DomainError);
    CHECK_THROWS_AS(mips_retrieve(vec({1.0, 0.0}), VectorIndex{}), DomainError);
}

TEST_CASE("mips_retrieve agrees with a brute-force scan on random data") {
    std::mt19937_64 rng(99);
    const std::size_t dim = 16;
    std::vector<std::vector<double>> rows(100, std::vector<double>(dim));
    for (auto& r : rows) {
        for (double& x : r) x = uniform_range(rng, -1.0, 1.0);
    }
    const VectorIndex index = synthetic_index(rows);
    for (int qi = 0; qi < 50; ++qi) {
        std::vector<double> q(dim);
        for (double& x : q) x = uniform_range(rng, -1.0, 1.0);
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < index.size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < dim; ++j) s += q[j] * index.docs[i].embedding.values[j];
            if (s > best_score) {
                best_score = s;
                best = i;
            }
        }
        const Retrieved hit = mips_retrieve(vec(q), index);
        CHECK(hit.position == best);
        CHECK(hit.score == doctest::Approx(best_score).epsilon(1e-12));
    }
}

TEST_CASE("feedback_for clamps to [-1, 1] and reports the hit") {
    const VectorIndex index = synthetic_index({
        {1.2, 0.0},
        {0.0, 1.0},
    });
    Retrieved hit;
    const double f = feedback_for(vec({1.0, 0.0}), index, &hit);
    CHECK(f == 1.0);
    CHECK(hit.position == 0);
    CHECK(hit.score == doctest::Approx(1.2));
    const VectorIndex negative = synthetic_index({{1.2, 0.0}});
    const double g = feedback_for(vec({-1.0, 0.0}), negative);
    CHECK(g == -1.0);
}

TEST_CASE("feedback_score uses the embedder end to end") {
    const auto docs = load_knowledge(fixtures_dir() / "kb" / "knowledge.jsonl");
    const EmbedFn embed = textenc::make_embedder(42);
    const VectorIndex index = build_index(docs, embed);
    const std::string text = "a red car waiting at the busy junction under heavy rain";
    const double f = feedback_score(text, index, embed);
    // The query is verbatim document k01: a unit vector against itself.
    CHECK(f == doctest::Approx(1.0).epsilon(1e-9));
    const double g = feedback_score("a grey motorcycle passing by", index, embed);
    CHECK(g >= -1.0);
    CHECK(g <= 1.0);
    CHECK_THROWS_AS(feedback_score("", index, embed), DomainError);
}
