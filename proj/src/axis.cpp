#include "halfface/axis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include "halfface/stitch.hpp"

namespace halfface {

// ---------------------------------------------------------------------------
// Integral image

IntegralImage::IntegralImage(const GrayImage& img) : w_(img.width), h_(img.height) {
    table_.assign(static_cast<size_t>(w_ + 1) * (h_ + 1), 0.0);
    for (int y = 0; y < h_; ++y) {
        double row_sum = 0.0;
        for (int x = 0; x < w_; ++x) {
            row_sum += img.at(x, y);
            table_[static_cast<size_t>(y + 1) * (w_ + 1) + (x + 1)] =
                table_[static_cast<size_t>(y) * (w_ + 1) + (x + 1)] + row_sum;
        }
    }
}

double IntegralImage::rect_sum(const Rect& r) const {
    if (r.x0 < 0 || r.y0 < 0 || r.w < 1 || r.h < 1 || r.x0 + r.w > w_ || r.y0 + r.h > h_)
        throw Error(ErrorCode::out_of_bounds, "rect_sum outside image");
    const auto idx = [this](int x, int y) {
        return table_[static_cast<size_t>(y) * (w_ + 1) + x];
    };
    return idx(r.x0 + r.w, r.y0 + r.h) - idx(r.x0, r.y0 + r.h) -
           idx(r.x0 + r.w, r.y0) + idx(r.x0, r.y0);
}

// ---------------------------------------------------------------------------
// Minimal XML reader for the legacy cascade format. Elements and text only;
// attributes are parsed but skipped, comments and processing instructions
// are ignored.

namespace {

struct XmlNode {
    std::string tag;
    std::string text;
    std::vector<std::unique_ptr<XmlNode>> children;

    const XmlNode* first(const std::string& name) const {
        for (const auto& c : children)
            if (c->tag == name) return c.get();
        return nullptr;
    }
};

class XmlParser {
public:
    explicit XmlParser(std::string src) : src_(std::move(src)) {}

    std::unique_ptr<XmlNode> parse() {
        skip_misc();
        auto root = parse_element();
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) {
        throw Error(ErrorCode::cascade_invalid, "XML parse error: " + what);
    }

    bool eof() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
    }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (pos_ + 3 < src_.size() && src_.compare(pos_, 4, "<!--") == 0) {
                const size_t end = src_.find("-->", pos_ + 4);
                if (end == std::string::npos) fail("unterminated comment");
                pos_ = end + 3;
            } else if (pos_ + 1 < src_.size() && (src_.compare(pos_, 2, "<?") == 0 ||
                                                  src_.compare(pos_, 2, "<!") == 0)) {
                const size_t end = src_.find('>', pos_);
                if (end == std::string::npos) fail("unterminated declaration");
                pos_ = end + 1;
            } else {
                return;
            }
        }
    }

    std::string parse_name() {
        const size_t start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                          peek() == '_' || peek() == '-' || peek() == ':' || peek() == '.'))
            ++pos_;
        if (pos_ == start) fail("expected name");
        return src_.substr(start, pos_ - start);
    }

    std::unique_ptr<XmlNode> parse_element() {
        if (eof() || peek() != '<') fail("expected '<'");
        ++pos_;
        auto node = std::make_unique<XmlNode>();
        node->tag = parse_name();

        // attributes (values discarded)
        for (;;) {
            skip_ws();
            if (eof()) fail("unterminated tag");
            if (peek() == '/') {
                ++pos_;
                if (eof() || peek() != '>') fail("malformed self-closing tag");
                ++pos_;
                return node;
            }
            if (peek() == '>') {
                ++pos_;
                break;
            }
            parse_name();
            skip_ws();
            if (eof() || peek() != '=') fail("attribute without value");
            ++pos_;
            skip_ws();
            if (eof() || (peek() != '"' && peek() != '\'')) fail("unquoted attribute");
            const char quote = peek();
            ++pos_;
            const size_t end = src_.find(quote, pos_);
            if (end == std::string::npos) fail("unterminated attribute value");
            pos_ = end + 1;
        }

        // content
        for (;;) {
            if (eof()) fail("unterminated element <" + node->tag + ">");
            if (peek() == '<') {
                if (pos_ + 3 < src_.size() && src_.compare(pos_, 4, "<!--") == 0) {
                    skip_misc();
                    continue;
                }
                if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                    pos_ += 2;
                    const std::string closing = parse_name();
                    if (closing != node->tag) fail("mismatched </" + closing + ">");
                    skip_ws();
                    if (eof() || peek() != '>') fail("malformed closing tag");
                    ++pos_;
                    return node;
                }
                node->children.push_back(parse_element());
            } else {
                node->text += peek();
                ++pos_;
            }
        }
    }

    std::string src_;
    size_t pos_ = 0;
};

std::vector<double> parse_doubles(const std::string& text) {
    std::istringstream in(text);
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    return out;
}

double node_double(const XmlNode* parent, const std::string& name) {
    const XmlNode* n = parent->first(name);
    if (!n)
        throw Error(ErrorCode::cascade_invalid, "missing <" + name + ">");
    const auto vals = parse_doubles(n->text);
    if (vals.size() != 1)
        throw Error(ErrorCode::cascade_invalid, "<" + name + "> is not a single number");
    return vals[0];
}

WeakClassifier parse_stump(const XmlNode* tree_node) {
    // A stump is the single root node of a tree: <_><feature>...</feature>
    // <threshold>..</threshold><left_val>..</left_val><right_val>..</right_val></_>
    const XmlNode* root = tree_node->first("_");
    if (!root)
        throw Error(ErrorCode::cascade_invalid, "tree without a root node");
    const XmlNode* feature = root->first("feature");
    if (!feature)
        throw Error(ErrorCode::cascade_invalid, "stump without <feature>");
    const XmlNode* rects = feature->first("rects");
    if (!rects || rects->children.empty())
        throw Error(ErrorCode::cascade_invalid, "feature without <rects>");

    WeakClassifier weak;
    for (const auto& r : rects->children) {
        const auto vals = parse_doubles(r->text);
        if (vals.size() != 5)
            throw Error(ErrorCode::cascade_invalid, "feature rect needs 5 numbers");
        FeatureRect fr;
        fr.rect = Rect{static_cast<int>(vals[0]), static_cast<int>(vals[1]),
                       static_cast<int>(vals[2]), static_cast<int>(vals[3])};
        fr.weight = vals[4];
        weak.rects.push_back(fr);
    }
    if (const XmlNode* tilted = feature->first("tilted");
        tilted && !parse_doubles(tilted->text).empty() && parse_doubles(tilted->text)[0] != 0.0)
        throw Error(ErrorCode::cascade_invalid, "tilted features not supported");
    weak.threshold = node_double(root, "threshold");
    if (root->first("left_node") || root->first("right_node"))
        throw Error(ErrorCode::cascade_invalid, "only stump trees supported");
    weak.left_val = node_double(root, "left_val");
    weak.right_val = node_double(root, "right_val");
    return weak;
}

// Locates the cascade element: the child of <opencv_storage> holding <size>
// and <stages>, or the document root itself.
const XmlNode* find_cascade_node(const XmlNode* root) {
    if (root->first("size") && root->first("stages")) return root;
    for (const auto& c : root->children)
        if (c->first("size") && c->first("stages")) return c.get();
    throw Error(ErrorCode::cascade_invalid, "no cascade element with <size> and <stages>");
}

} // namespace

void CascadeModel::validate() const {
    if (window_w < 1 || window_h < 1)
        throw Error(ErrorCode::cascade_invalid, "non-positive base window");
    if (stages.empty())
        throw Error(ErrorCode::cascade_invalid, "empty stage list");
    for (const auto& stage : stages) {
        if (stage.weak.empty())
            throw Error(ErrorCode::cascade_invalid, "stage without weak classifiers");
        for (const auto& weak : stage.weak) {
            if (weak.rects.empty())
                throw Error(ErrorCode::cascade_invalid, "feature without rectangles");
            for (const auto& fr : weak.rects) {
                const Rect& r = fr.rect;
                if (r.x0 < 0 || r.y0 < 0 || r.w < 1 || r.h < 1 ||
                    r.x0 + r.w > window_w || r.y0 + r.h > window_h)
                    throw Error(ErrorCode::cascade_invalid,
                                "feature rectangle outside base window");
            }
        }
    }
}

CascadeModel load_cascade(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::missing_file, path);
    std::stringstream buf;
    buf << in.rdbuf();

    XmlParser parser(buf.str());
    const auto doc = parser.parse();
    const XmlNode* cascade = find_cascade_node(doc.get());

    CascadeModel model;
    const auto size_vals = parse_doubles(cascade->first("size")->text);
    if (size_vals.size() != 2)
        throw Error(ErrorCode::cascade_invalid, "<size> needs two numbers");
    model.window_w = static_cast<int>(size_vals[0]);
    model.window_h = static_cast<int>(size_vals[1]);

    for (const auto& stage_node : cascade->first("stages")->children) {
        CascadeStage stage;
        stage.threshold = node_double(stage_node.get(), "stage_threshold");
        const XmlNode* trees = stage_node->first("trees");
        if (!trees)
            throw Error(ErrorCode::cascade_invalid, "stage without <trees>");
        for (const auto& tree : trees->children)
            stage.weak.push_back(parse_stump(tree.get()));
        model.stages.push_back(std::move(stage));
    }

    model.validate();
    return model;
}

// ---------------------------------------------------------------------------
// Detection

namespace {

struct Detection {
    Rect rect;
    double score = 0.0;
};

double iou(const Rect& a, const Rect& b) {
    const int x0 = std::max(a.x0, b.x0);
    const int y0 = std::max(a.y0, b.y0);
    const int x1 = std::min(a.x0 + a.w, b.x0 + b.w);
    const int y1 = std::min(a.y0 + a.h, b.y0 + b.h);
    if (x1 <= x0 || y1 <= y0) return 0.0;
    const double inter = static_cast<double>(x1 - x0) * (y1 - y0);
    const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
    return inter / uni;
}

// Evaluates the cascade on one window. Returns the accumulated stage margin
// or nullopt when a stage rejects (or the window variance is degenerate).
std::optional<double> eval_window(const IntegralImage& sat, const IntegralImage& sat2,
                                  const CascadeModel& model, int wx, int wy, double scale) {
    const int ww = static_cast<int>(std::lround(model.window_w * scale));
    const int wh = static_cast<int>(std::lround(model.window_h * scale));
    const Rect window{wx, wy, ww, wh};
    const double area = static_cast<double>(ww) * wh;

    const double sum = sat.rect_sum(window);
    const double sum2 = sat2.rect_sum(window);
    const double mean = sum / area;
    const double var = sum2 / area - mean * mean;
    const double sigma = var > 0.0 ? std::sqrt(var) : 0.0;
    if (sigma < 1e-6) return std::nullopt;

    double margin = 0.0;
    for (const auto& stage : model.stages) {
        double stage_sum = 0.0;
        for (const auto& weak : stage.weak) {
            double feature = 0.0;
            for (const auto& fr : weak.rects) {
                Rect scaled{wx + static_cast<int>(std::lround(fr.rect.x0 * scale)),
                            wy + static_cast<int>(std::lround(fr.rect.y0 * scale)),
                            std::max(1, static_cast<int>(std::lround(fr.rect.w * scale))),
                            std::max(1, static_cast<int>(std::lround(fr.rect.h * scale)))};
                scaled.w = std::min(scaled.w, wx + ww - scaled.x0);
                scaled.h = std::min(scaled.h, wy + wh - scaled.y0);
                if (scaled.w < 1 || scaled.h < 1) continue;
                feature += fr.weight * sat.rect_sum(scaled);
            }
            feature /= area * sigma; // contrast normalization
            stage_sum += feature < weak.threshold ? weak.left_val : weak.right_val;
        }
        if (stage_sum < stage.threshold) return std::nullopt;
        margin += stage_sum - stage.threshold;
    }
    return margin;
}

} // namespace

std::optional<BoundingBox> detect_nose(const GrayImage& img, const CascadeModel& model,
                                       double scale_step, int min_neighbors) {
    model.validate();
    if (scale_step <= 1.0)
        throw Error(ErrorCode::bad_argument, "scale_step must exceed 1");
    if (img.width < model.window_w || img.height < model.window_h)
        throw Error(ErrorCode::bad_argument, "image smaller than cascade base window");

    GrayImage squared(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i)
        squared.data[i] = img.data[i] * img.data[i];
    const IntegralImage sat(img);
    const IntegralImage sat2(squared);

    std::vector<Detection> hits;
    for (double scale = 1.0;; scale *= scale_step) {
        const int ww = static_cast<int>(std::lround(model.window_w * scale));
        const int wh = static_cast<int>(std::lround(model.window_h * scale));
        if (ww > img.width || wh > img.height) break;
        const int step = std::max(1, static_cast<int>(scale));
        for (int wy = 0; wy + wh <= img.height; wy += step)
            for (int wx = 0; wx + ww <= img.width; wx += step)
                if (const auto margin = eval_window(sat, sat2, model, wx, wy, scale))
                    hits.push_back({Rect{wx, wy, ww, wh}, *margin});
    }
    if (hits.empty()) return std::nullopt;

    // Union-find grouping on IoU >= 0.5.
    std::vector<size_t> parent(hits.size());
    std::iota(parent.begin(), parent.end(), size_t{0});
    const auto find = [&](size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (size_t a = 0; a < hits.size(); ++a)
        for (size_t b = a + 1; b < hits.size(); ++b)
            if (iou(hits[a].rect, hits[b].rect) >= 0.5)
                parent[find(a)] = find(b);

    struct Group {
        double x0 = 0, y0 = 0, w = 0, h = 0, score = 0;
        int count = 0;
    };
    std::map<size_t, Group> groups;
    for (size_t i = 0; i < hits.size(); ++i) {
        Group& g = groups[find(i)];
        g.x0 += hits[i].rect.x0;
        g.y0 += hits[i].rect.y0;
        g.w += hits[i].rect.w;
        g.h += hits[i].rect.h;
        g.score += hits[i].score;
        g.count += 1;
    }

    std::optional<BoundingBox> best;
    for (const auto& [root, g] : groups) {
        if (g.count < min_neighbors) continue;
        const double mean_score = g.score / g.count;
        if (!best || mean_score > best->score) {
            best = BoundingBox{
                Rect{static_cast<int>(std::lround(g.x0 / g.count)),
                     static_cast<int>(std::lround(g.y0 / g.count)),
                     std::max(1, static_cast<int>(std::lround(g.w / g.count))),
                     std::max(1, static_cast<int>(std::lround(g.h / g.count)))},
                mean_score};
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Mirror symmetry search

namespace {
constexpr int kMaxBand = 40;
}

SymmetryAxis mirror_search_axis(const GrayImage& img, int c_min, int c_max) {
    if (c_min < 1 || c_max < c_min || c_max > img.width - 2)
        throw Error(ErrorCode::bad_argument, "mirror search range outside [1, width-2]");

    bool any_defined = false;
    double best = -2.0;
    int best_col = -1;
    std::vector<double> lhs, rhs;
    for (int c = c_min; c <= c_max; ++c) {
        const int band = std::min({c, img.width - 1 - c, kMaxBand});
        if (band < 1) continue;
        lhs.clear();
        rhs.clear();
        // band left of c vs the flipped band right of c: compare
        // img(c-1-s, y) against img(c+s, y)
        for (int y = 0; y < img.height; ++y)
            for (int s = 0; s < band; ++s) {
                lhs.push_back(img.at(c - 1 - s, y));
                rhs.push_back(img.at(c + s, y));
            }
        double score;
        try {
            score = detail::pearson(lhs, rhs);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::zero_variance) continue;
            throw;
        }
        any_defined = true;
        if (score > best) {
            best = score;
            best_col = c;
        }
    }
    if (!any_defined)
        throw Error(ErrorCode::zero_variance,
                    "mirror correlation undefined at every candidate column");
    return SymmetryAxis{static_cast<double>(best_col), AxisMethod::mirror_search, best};
}

SymmetryAxis mirror_search_axis(const GrayImage& img) {
    const int c_min = std::max(1, img.width / 4);
    const int c_max = std::min(img.width - 2, 3 * img.width / 4);
    return mirror_search_axis(img, c_min, c_max);
}

SymmetryAxis axis_from_nose(const BoundingBox& bb) {
    return SymmetryAxis{bb.rect.x0 + bb.rect.w / 2.0, AxisMethod::cascade, bb.score};
}

} // namespace halfface
