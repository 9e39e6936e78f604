#include "v2t/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "v2t/errors.hpp"
#include "v2t/jsonio.hpp"

namespace v2t::metrics {

namespace {

// Tokens from the PNM text, with '#' comments stripped to end of line.
class PnmScanner {
public:
    explicit PnmScanner(const std::string& text) : text_(text) {}

    std::string next() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos_;
            } else {
                break;
            }
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '#') {
            ++pos_;
        }
        return text_.substr(start, pos_ - start);
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
};

long parse_pnm_int(PnmScanner& scanner, const char* what) {
    const std::string tok = scanner.next();
    if (tok.empty()) {
        throw LoadError(LoadError::Kind::bad_format, std::string("pnm: missing ") + what);
    }
    try {
        std::size_t used = 0;
        const long v = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw LoadError(LoadError::Kind::bad_format,
                        std::string("pnm: bad ") + what + " \"" + tok + "\"");
    }
}

void require_same_shape(const RasterImage& a, const RasterImage& b, const char* op) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
        throw DomainError(std::string(op) + ": image shape mismatch");
    }
}

} // namespace

RasterImage parse_pnm(const std::string& text) {
    PnmScanner scanner(text);
    const std::string magic = scanner.next();
    std::size_t channels = 0;
    if (magic == "P2") {
        channels = 1;
    } else if (magic == "P3") {
        channels = 3;
    } else {
        throw LoadError(LoadError::Kind::bad_format, "pnm: expected P2 or P3, got \"" + magic + "\"");
    }
    const long width = parse_pnm_int(scanner, "width");
    const long height = parse_pnm_int(scanner, "height");
    const long maxval = parse_pnm_int(scanner, "maxval");
    if (width <= 0 || height <= 0) {
        throw LoadError(LoadError::Kind::bad_format, "pnm: non-positive dimensions");
    }
    if (maxval < 1 || maxval > 255) {
        throw LoadError(LoadError::Kind::bad_format, "pnm: maxval must be in 1..255");
    }
    RasterImage img;
    img.width = static_cast<std::size_t>(width);
    img.height = static_cast<std::size_t>(height);
    img.channels = channels;
    img.samples.reserve(img.sample_count());
    for (std::size_t i = 0; i < img.sample_count(); ++i) {
        const long v = parse_pnm_int(scanner, "sample");
        if (v < 0 || v > maxval) {
            throw LoadError(LoadError::Kind::bad_format, "pnm: sample out of range");
        }
        img.samples.push_back(static_cast<std::uint8_t>(v));
    }
    return img;
}

RasterImage load_pnm(const std::filesystem::path& path) {
    return parse_pnm(read_file(path));
}

std::string write_pnm(const RasterImage& img) {
    if (img.channels != 1 && img.channels != 3) {
        throw DomainError("write_pnm: channels must be 1 or 3");
    }
    if (img.samples.size() != img.sample_count()) {
        throw DomainError("write_pnm: sample count mismatch");
    }
    std::ostringstream out;
    out << (img.channels == 1 ? "P2" : "P3") << "\n";
    out << img.width << " " << img.height << "\n255\n";
    const std::size_t per_row = img.width * img.channels;
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < per_row; ++x) {
            if (x) out << " ";
            out << static_cast<int>(img.samples[y * per_row + x]);
        }
        out << "\n";
    }
    return out.str();
}

double mse(const RasterImage& a, const RasterImage& b) {
    require_same_shape(a, b, "mse");
    if (a.samples.empty()) {
        throw DomainError("mse: empty image");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const double d = static_cast<double>(a.samples[i]) - static_cast<double>(b.samples[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(a.samples.size());
}

double psnr(const RasterImage& a, const RasterImage& b, double max_value) {
    const double err = mse(a, b);
    if (err == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(max_value * max_value / err);
}

namespace {

double ssim_window(const RasterImage& a, const RasterImage& b,
                   std::size_t x0, std::size_t y0, std::size_t c, std::size_t win) {
    constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
    const std::size_t n = win * win;
    double sum_a = 0.0, sum_b = 0.0;
    for (std::size_t dy = 0; dy < win; ++dy) {
        for (std::size_t dx = 0; dx < win; ++dx) {
            const std::size_t idx = ((y0 + dy) * a.width + (x0 + dx)) * a.channels + c;
            sum_a += a.samples[idx];
            sum_b += b.samples[idx];
        }
    }
    const double mu_a = sum_a / static_cast<double>(n);
    const double mu_b = sum_b / static_cast<double>(n);
    double var_a = 0.0, var_b = 0.0, cov = 0.0;
    for (std::size_t dy = 0; dy < win; ++dy) {
        for (std::size_t dx = 0; dx < win; ++dx) {
            const std::size_t idx = ((y0 + dy) * a.width + (x0 + dx)) * a.channels + c;
            const double da = a.samples[idx] - mu_a;
            const double db = b.samples[idx] - mu_b;
            var_a += da * da;
            var_b += db * db;
            cov += da * db;
        }
    }
    var_a /= static_cast<double>(n);
    var_b /= static_cast<double>(n);
    cov /= static_cast<double>(n);
    return ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
           ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
}

} // namespace

double ssim(const RasterImage& a, const RasterImage& b) {
    require_same_shape(a, b, "ssim");
    constexpr std::size_t kWin = 8;
    constexpr std::size_t kStride = 4;
    if (a.width < kWin || a.height < kWin) {
        throw DomainError("ssim: image must be at least 8x8");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < a.channels; ++c) {
        for (std::size_t y0 = 0; y0 + kWin <= a.height; y0 += kStride) {
            for (std::size_t x0 = 0; x0 + kWin <= a.width; x0 += kStride) {
                sum += ssim_window(a, b, x0, y0, c, kWin);
                ++count;
            }
        }
    }
    return sum / static_cast<double>(count);
}

double srra(const std::vector<EmbeddingVector>& reconstructed,
            const std::vector<GalleryEntry>& gallery,
            const std::vector<std::string>& truth) {
    if (reconstructed.size() != truth.size()) {
        throw DomainError("srra: reconstructed/truth size mismatch");
    }
    if (reconstructed.empty()) {
        throw DomainError("srra: no reconstructions");
    }
    if (gallery.empty()) {
        throw DomainError("srra: empty gallery");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < reconstructed.size(); ++i) {
        std::size_t best = 0;
        double best_score = dot(reconstructed[i].values, gallery[0].embedding.values);
        for (std::size_t g = 1; g < gallery.size(); ++g) {
            const double s = dot(reconstructed[i].values, gallery[g].embedding.values);
            if (s > best_score) {
                best_score = s;
                best = g;
            }
        }
        if (gallery[best].identity == truth[i]) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(reconstructed.size());
}

Lexicons default_lexicons() {
    Lexicons lex;
    lex.descriptive = {"red",   "blue",  "green", "white", "black", "silver", "large",
                       "small", "busy",  "quiet", "heavy", "light", "wet",    "dry",
                       "dark",  "bright", "old",  "new",   "fast",  "slow",   "crowded",
                       "empty", "foggy", "rainy", "sunny", "parked", "moving", "stationary"};
    lex.markers = {"which", "that", "while", "where"};
    lex.entities = {"car",     "truck",   "bus",        "van",          "bicycle",  "motorcycle",
                    "taxi",    "tram",    "pedestrian", "driver",       "cyclist",  "person",
                    "junction", "intersection", "crosswalk", "roundabout", "highway", "street",
                    "road",    "lane",    "sidewalk",   "bridge",       "signal",   "sign"};
    lex.modifiers = lex.descriptive;
    lex.modifiers.insert({"slowly", "quickly", "carefully", "suddenly", "nearby", "distant"});
    return lex;
}

Lexicons load_lexicons(const std::filesystem::path& path) {
    const nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw LoadError(LoadError::Kind::bad_format, "lexicons: not a JSON object: " + path.string());
    }
    auto read_list = [&](const char* key) {
        std::set<std::string> out;
        if (!j.contains(key) || !j[key].is_array()) {
            throw LoadError(LoadError::Kind::bad_format,
                            std::string("lexicons: missing array \"") + key + "\"");
        }
        for (const auto& w : j[key]) {
            if (!w.is_string()) {
                throw LoadError(LoadError::Kind::bad_format,
                                std::string("lexicons: non-string entry under \"") + key + "\"");
            }
            out.insert(w.get<std::string>());
        }
        return out;
    };
    Lexicons lex;
    lex.descriptive = read_list("descriptive");
    lex.markers = read_list("markers");
    lex.entities = read_list("entities");
    lex.modifiers = read_list("modifiers");
    return lex;
}

TextStats text_stats(const std::string& text, const Lexicons& lexicons) {
    const std::vector<std::string> words = textenc::split_words(text);
    TextStats stats;
    stats.words = words.size();
    if (words.empty()) {
        return stats;
    }
    std::set<std::string> unique(words.begin(), words.end());
    stats.unique_words = unique.size();
    std::size_t detail = 0;
    for (const std::string& w : words) {
        if (lexicons.descriptive.count(w) || lexicons.markers.count(w)) ++detail;
        if (lexicons.entities.count(w)) ++stats.entity_count;
        if (lexicons.modifiers.count(w)) ++stats.modifier_count;
    }
    stats.detail_density = static_cast<double>(detail) / static_cast<double>(words.size());
    return stats;
}

double semantic_similarity(const std::string& text_a,
                           const std::string& text_b,
                           const EmbedFn& embedder) {
    if (text_a.empty() || text_b.empty()) {
        throw DomainError("semantic_similarity: empty text");
    }
    return cosine(embedder(text_a), embedder(text_b));
}

namespace {

void validate_grid(const DetectionGrid& g, const char* name) {
    if (g.cells.size() != g.side * g.side) {
        throw DomainError(std::string("detection_loss: ") + name + " cell count != side^2");
    }
    for (const DetectionCell& cell : g.cells) {
        if (cell.indicator != 0 && cell.indicator != 1) {
            throw DomainError(std::string("detection_loss: ") + name + " indicator must be 0 or 1");
        }
        if (cell.probs.size() != g.class_count) {
            throw DomainError(std::string("detection_loss: ") + name + " class count mismatch");
        }
        double sum = 0.0;
        for (double p : cell.probs) sum += p;
        if (std::abs(sum - 1.0) > 1e-6) {
            throw DomainError(std::string("detection_loss: ") + name +
                              " probabilities must sum to 1");
        }
    }
}

} // namespace

double detection_loss(const DetectionGrid& truth, const DetectionGrid& pred) {
    if (truth.side != pred.side || truth.class_count != pred.class_count) {
        throw DomainError("detection_loss: grid shape mismatch");
    }
    validate_grid(truth, "truth");
    validate_grid(pred, "pred");
    double loss = 0.0;
    for (std::size_t i = 0; i < truth.cells.size(); ++i) {
        if (!truth.cells[i].indicator) continue;
        const auto& p = truth.cells[i].probs;
        const auto& q = pred.cells[i].probs;
        for (std::size_t c = 0; c < truth.class_count; ++c) {
            const double d = p[c] - q[c];
            loss += d * d;
        }
    }
    return loss;
}

} // namespace v2t::metrics
