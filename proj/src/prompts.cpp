#include "v2t/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "v2t/errors.hpp"

namespace v2t::prompts {

namespace {

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

void index_levels(PromptCatalog& catalog) {
    catalog.by_level.clear();
    for (std::size_t i = 0; i < catalog.entries.size(); ++i) {
        catalog.by_level[catalog.entries[i].level].push_back(i);
    }
}

} // namespace

PromptCatalog make_catalog(std::vector<PromptEntry> entries) {
    if (entries.empty()) {
        throw LoadError(LoadError::Kind::empty_file, "empty catalog");
    }
    std::set<std::string> seen;
    for (const PromptEntry& e : entries) {
        if (e.text.empty()) {
            throw LoadError(LoadError::Kind::malformed_line,
                            "prompt \"" + e.id + "\" has empty text");
        }
        if (!seen.insert(e.id).second) {
            throw LoadError(LoadError::Kind::duplicate_id,
                            "duplicate prompt id \"" + e.id + "\"");
        }
    }
    PromptCatalog catalog;
    catalog.entries = std::move(entries);
    index_levels(catalog);
    return catalog;
}

PromptCatalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw LoadError(LoadError::Kind::missing_file, "cannot open catalog: " + path.string());
    }
    std::vector<PromptEntry> entries;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw LoadError(LoadError::Kind::malformed_line,
                            "catalog line " + std::to_string(lineno) + ": not a JSON object");
        }
        if (!j.contains("id") || !j["id"].is_string() ||
            !j.contains("level") || !j["level"].is_number_integer() ||
            !j.contains("text") || !j["text"].is_string()) {
            throw LoadError(LoadError::Kind::malformed_line,
                            "catalog line " + std::to_string(lineno) +
                                ": expected string id, integer level, string text");
        }
        PromptEntry e;
        e.id = j["id"].get<std::string>();
        e.level = j["level"].get<int>();
        e.text = j["text"].get<std::string>();
        if (e.id.empty() || e.text.empty()) {
            throw LoadError(LoadError::Kind::malformed_line,
                            "catalog line " + std::to_string(lineno) + ": empty id or text");
        }
        if (e.level < 1 || e.level > 3) {
            throw LoadError(LoadError::Kind::malformed_line,
                            "catalog line " + std::to_string(lineno) + ": level must be 1..3");
        }
        if (!seen.insert(e.id).second) {
            throw LoadError(LoadError::Kind::duplicate_id,
                            "catalog line " + std::to_string(lineno) + ": duplicate prompt id \"" +
                                e.id + "\"");
        }
        entries.push_back(std::move(e));
    }
    if (entries.empty()) {
        throw LoadError(LoadError::Kind::empty_file, "empty catalog: " + path.string());
    }
    PromptCatalog catalog;
    catalog.entries = std::move(entries);
    index_levels(catalog);
    return catalog;
}

std::vector<RankedPrompt> rank_against(const EmbeddingVector& text_embedding,
                                       const std::vector<EmbeddingVector>& prompt_embeddings) {
    std::vector<RankedPrompt> ranked;
    ranked.reserve(prompt_embeddings.size());
    for (std::size_t i = 0; i < prompt_embeddings.size(); ++i) {
        ranked.push_back({i, cosine(text_embedding, prompt_embeddings[i])});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedPrompt& a, const RankedPrompt& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
    return ranked;
}

std::vector<RankedPrompt> rank_prompts(const EmbeddingVector& text_embedding,
                                       const PromptCatalog& catalog,
                                       const EmbedFn& embedder) {
    if (catalog.entries.empty()) {
        throw DomainError("rank_prompts: empty catalog");
    }
    std::vector<EmbeddingVector> prompt_embeddings;
    prompt_embeddings.reserve(catalog.entries.size());
    for (const PromptEntry& e : catalog.entries) {
        prompt_embeddings.push_back(embedder(e.text));
    }
    return rank_against(text_embedding, prompt_embeddings);
}

std::vector<std::size_t> retained_positions(const std::vector<RankedPrompt>& ranked,
                                            std::size_t k) {
    if (k < 1 || k > ranked.size()) {
        throw DomainError("retained_positions: k out of range");
    }
    std::vector<RankedPrompt> order = ranked;
    std::sort(order.begin(), order.end(), [](const RankedPrompt& a, const RankedPrompt& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
    std::vector<std::size_t> keep;
    keep.reserve(k);
    for (std::size_t i = 0; i < k; ++i) keep.push_back(order[i].index);
    std::sort(keep.begin(), keep.end());
    return keep;
}

PromptCatalog update_prompt_list(const PromptCatalog& catalog,
                                 const std::vector<RankedPrompt>& ranked,
                                 std::size_t k) {
    const std::vector<std::size_t> keep = retained_positions(ranked, k);
    PromptCatalog out;
    for (std::size_t pos : keep) {
        if (pos >= catalog.entries.size()) {
            throw DomainError("update_prompt_list: ranked index out of range");
        }
        out.entries.push_back(catalog.entries[pos]);
    }
    index_levels(out);
    return out;
}

std::size_t default_retention(std::size_t n) {
    if (n == 0) {
        throw DomainError("default_retention: empty list");
    }
    const std::size_t half = (n + 1) / 2;
    return std::min(n, std::max<std::size_t>(3, half));
}

} // namespace v2t::prompts
