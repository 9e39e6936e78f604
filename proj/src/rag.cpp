#include "v2t/rag.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "v2t/errors.hpp"

namespace v2t::rag {

std::vector<std::pair<std::string, std::string>> load_knowledge(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw LoadError(LoadError::Kind::missing_file,
                        "cannot open knowledge base: " + path.string());
    }
    std::vector<std::pair<std::string, std::string>> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const bool only_space = std::all_of(line.begin(), line.end(), [](unsigned char c) {
            return c == ' ' || c == '\t' || c == '\r';
        });
        if (only_space) continue;
        const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j["id"].is_string() ||
            !j.contains("text") || !j["text"].is_string()) {
            throw LoadError(LoadError::Kind::malformed_line,
                            "knowledge base line " + std::to_string(lineno) +
                                ": expected {\"id\": str, \"text\": str}");
        }
        docs.emplace_back(j["id"].get<std::string>(), j["text"].get<std::string>());
    }
    if (docs.empty()) {
        throw LoadError(LoadError::Kind::empty_file, "empty knowledge base: " + path.string());
    }
    return docs;
}

VectorIndex build_index(const std::vector<std::pair<std::string, std::string>>& docs,
                        const EmbedFn& embedder) {
    if (docs.empty()) {
        throw LoadError(LoadError::Kind::empty_file, "empty knowledge base");
    }
    std::vector<KnowledgeDoc> built;
    built.reserve(docs.size());
    for (const auto& [id, text] : docs) {
        KnowledgeDoc doc;
        doc.id = id;
        doc.text = text;
        doc.embedding = embedder(text);
        built.push_back(std::move(doc));
    }
    return build_index_from_embeddings(std::move(built));
}

VectorIndex build_index_from_embeddings(std::vector<KnowledgeDoc> docs) {
    if (docs.empty()) {
        throw LoadError(LoadError::Kind::empty_file, "empty knowledge base");
    }
    std::set<std::string> seen;
    const std::size_t dim = docs.front().embedding.values.size();
    for (const KnowledgeDoc& doc : docs) {
        if (!seen.insert(doc.id).second) {
            throw LoadError(LoadError::Kind::duplicate_id,
                            "duplicate knowledge doc id \"" + doc.id + "\"");
        }
        if (doc.embedding.values.size() != dim) {
            throw DomainError("build_index: embedding dimension mismatch for \"" + doc.id + "\"");
        }
    }
    VectorIndex index;
    index.docs = std::move(docs);
    index.dim = dim;
    return index;
}

Retrieved mips_retrieve(const EmbeddingVector& q, const VectorIndex& index) {
    if (index.docs.empty()) {
        throw DomainError("mips_retrieve: empty index");
    }
    if (q.values.size() != index.dim) {
        throw DomainError("mips_retrieve: query dimension mismatch");
    }
    std::size_t best = 0;
    double best_score = dot(q.values, index.docs[0].embedding.values);
    for (std::size_t i = 1; i < index.docs.size(); ++i) {
        const double s = dot(q.values, index.docs[i].embedding.values);
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return {index.docs[best].id, best, best_score};
}

double feedback_for(const EmbeddingVector& q, const VectorIndex& index, Retrieved* hit) {
    Retrieved r = mips_retrieve(q, index);
    const double f = std::clamp(r.score, -1.0, 1.0);
    if (hit) *hit = std::move(r);
    return f;
}

double feedback_score(const std::string& generated_text,
                      const VectorIndex& index,
                      const EmbedFn& embedder) {
    if (generated_text.empty()) {
        throw DomainError("feedback_score: empty generated text");
    }
    return feedback_for(embedder(generated_text), index);
}

} // namespace v2t::rag
