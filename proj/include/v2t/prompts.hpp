#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "v2t/textenc.hpp"

namespace v2t::prompts {

struct PromptEntry {
    std::string id;
    int level = 1;
    std::string text;
};

struct PromptCatalog {
    std::vector<PromptEntry> entries;
    // Entry indices grouped by hierarchy tier, ascending within each tier.
    std::map<int, std::vector<std::size_t>> by_level;

    std::size_t size() const { return entries.size(); }
};

struct RankedPrompt {
    std::size_t index = 0;
    double score = 0.0;
};

// JSONL, one {"id", "level", "text"} object per line; blank lines skipped.
PromptCatalog load_catalog(const std::filesystem::path& path);

PromptCatalog make_catalog(std::vector<PromptEntry> entries);

// Cosine of the text embedding against each prompt embedding, sorted by
// score descending, ties by ascending index.
std::vector<RankedPrompt> rank_against(const EmbeddingVector& text_embedding,
                                       const std::vector<EmbeddingVector>& prompt_embeddings);

std::vector<RankedPrompt> rank_prompts(const EmbeddingVector& text_embedding,
                                       const PromptCatalog& catalog,
                                       const EmbedFn& embedder);

// Indices of the k best-ranked prompts, ascending, using the canonical
// ordering (score desc, ties by ascending index).
std::vector<std::size_t> retained_positions(const std::vector<RankedPrompt>& ranked,
                                            std::size_t k);

// Sub-catalog of the k best-ranked prompts, original relative order kept.
PromptCatalog update_prompt_list(const PromptCatalog& catalog,
                                 const std::vector<RankedPrompt>& ranked,
                                 std::size_t k);

// Halve the list each round but never below 3 (or below n itself).
std::size_t default_retention(std::size_t n);

} // namespace v2t::prompts
