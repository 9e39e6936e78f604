#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "v2t/textenc.hpp"

namespace v2t::metrics {

struct RasterImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> samples;

    std::size_t sample_count() const { return width * height * channels; }
};

// Plain-text portable graymap/pixmap (P2/P3), '#' comments allowed,
// maxval at most 255.
RasterImage parse_pnm(const std::string& text);
RasterImage load_pnm(const std::filesystem::path& path);
std::string write_pnm(const RasterImage& img);

double mse(const RasterImage& a, const RasterImage& b);

// mse of 0 yields +infinity; report writers emit the "inf" sentinel.
double psnr(const RasterImage& a, const RasterImage& b, double max_value = 255.0);

// Mean windowed SSIM, 8x8 windows, stride 4, standard constants.
double ssim(const RasterImage& a, const RasterImage& b);

struct GalleryEntry {
    std::string identity;
    EmbeddingVector embedding;
};

// Re-identification success rate: percentage of reconstructions whose
// nearest gallery neighbor (max inner product, earliest tie) has the
// true identity. Lower = better privacy.
double srra(const std::vector<EmbeddingVector>& reconstructed,
            const std::vector<GalleryEntry>& gallery,
            const std::vector<std::string>& truth);

struct Lexicons {
    std::set<std::string> descriptive;
    std::set<std::string> markers;
    std::set<std::string> entities;
    std::set<std::string> modifiers;
};

Lexicons default_lexicons();
Lexicons load_lexicons(const std::filesystem::path& path);

struct TextStats {
    std::size_t words = 0;
    std::size_t unique_words = 0;
    double detail_density = 0.0;
    std::size_t entity_count = 0;
    std::size_t modifier_count = 0;
};

TextStats text_stats(const std::string& text, const Lexicons& lexicons);

double semantic_similarity(const std::string& text_a,
                           const std::string& text_b,
                           const EmbedFn& embedder);

struct DetectionCell {
    int indicator = 0;
    std::vector<double> probs;
};

struct DetectionGrid {
    std::size_t side = 0;
    std::size_t class_count = 0;
    std::vector<DetectionCell> cells;
};

// Sum over cells of the truth indicator times the squared class
// probability gap. Both grids must satisfy the DetectionGrid invariants.
double detection_loss(const DetectionGrid& truth, const DetectionGrid& pred);

} // namespace v2t::metrics
