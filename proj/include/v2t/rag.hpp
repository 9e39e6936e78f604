#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "v2t/textenc.hpp"

namespace v2t::rag {

struct KnowledgeDoc {
    std::string id;
    std::string text;
    EmbeddingVector embedding;
};

// Immutable after build; retrieval is an exact exhaustive scan.
struct VectorIndex {
    std::vector<KnowledgeDoc> docs;
    std::size_t dim = 0;

    std::size_t size() const { return docs.size(); }
};

struct Retrieved {
    std::string id;
    std::size_t position = 0;
    double score = 0.0;
};

// JSONL, one {"id", "text"} object per line.
std::vector<std::pair<std::string, std::string>> load_knowledge(const std::filesystem::path& path);

VectorIndex build_index(const std::vector<std::pair<std::string, std::string>>& docs,
                        const EmbedFn& embedder);

// For callers that already hold vectors (index files, synthetic bases).
VectorIndex build_index_from_embeddings(std::vector<KnowledgeDoc> docs);

// Highest inner product wins; ties go to the lowest insertion position.
Retrieved mips_retrieve(const EmbeddingVector& q, const VectorIndex& index);

// Inner product with the retrieved doc, clamped to [-1, 1].
double feedback_score(const std::string& generated_text,
                      const VectorIndex& index,
                      const EmbedFn& embedder);

double feedback_for(const EmbeddingVector& q, const VectorIndex& index, Retrieved* hit = nullptr);

} // namespace v2t::rag
