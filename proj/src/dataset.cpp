#include "atdl/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "atdl/errors.hpp"
#include "atdl/rng.hpp"

namespace atdl {

namespace {

constexpr char kContainerMagic[8] = {'A', 'T', 'D', 'L', 'D', 'S', '0', '1'};
constexpr std::uint32_t kContainerVersion = 1;

std::vector<unsigned char> read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> bytes(size);
    if (size > 0) in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) throw FormatError("failed reading " + path);
    return bytes;
}

std::uint32_t read_be32(const unsigned char *p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

std::uint32_t read_le32(const unsigned char *p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::uint64_t read_le64(const unsigned char *p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void append_le32(std::vector<unsigned char> &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void append_le64(std::vector<unsigned char> &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

std::uint64_t byte_sum(const unsigned char *p, std::size_t n) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += p[i];
    return sum;
}

std::vector<std::string> digit_names(std::size_t k) {
    std::vector<std::string> names;
    names.reserve(k);
    for (std::size_t i = 0; i < k; ++i) names.push_back(std::to_string(i));
    return names;
}

} // namespace

void Dataset::validate() const {
    if (labels.size() != x.rows())
        throw FormatError("dataset: " + std::to_string(x.rows()) + " rows but " +
                          std::to_string(labels.size()) + " labels");
    if (height * width * channels != x.cols())
        throw FormatError("dataset: dims " + std::to_string(height) + "x" +
                          std::to_string(width) + "x" + std::to_string(channels) +
                          " do not cover " + std::to_string(x.cols()) + " features");
    const std::size_t vocab = label_names.size();
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= vocab)
            throw FormatError("dataset: label " + std::to_string(labels[i]) + " at row " +
                              std::to_string(i) + " exceeds vocabulary of " +
                              std::to_string(vocab));
    const double *p = x.data();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(p[i] >= 0.0 && p[i] <= 1.0))
            throw FormatError("dataset: feature outside [0,1] at flat index " +
                              std::to_string(i));
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes(), 0);
    for (std::uint32_t l : labels) ++counts[l];
    return counts;
}

Dataset load_idx(const std::string &images_path, const std::string &labels_path) {
    const auto img = read_file(images_path);
    if (img.size() < 16) throw FormatError(images_path + ": truncated IDX header");
    if (read_be32(img.data()) != 0x00000803u)
        throw FormatError(images_path + ": bad IDX image magic");
    const std::size_t n = read_be32(img.data() + 4);
    const std::size_t h = read_be32(img.data() + 8);
    const std::size_t w = read_be32(img.data() + 12);
    if (img.size() != 16 + n * h * w)
        throw FormatError(images_path + ": expected " + std::to_string(16 + n * h * w) +
                          " bytes, found " + std::to_string(img.size()));

    const auto lab = read_file(labels_path);
    if (lab.size() < 8) throw FormatError(labels_path + ": truncated IDX header");
    if (read_be32(lab.data()) != 0x00000801u)
        throw FormatError(labels_path + ": bad IDX label magic");
    const std::size_t ln = read_be32(lab.data() + 4);
    if (lab.size() != 8 + ln) throw FormatError(labels_path + ": truncated label payload");
    if (ln != n)
        throw FormatError("IDX pair inconsistent: " + std::to_string(n) + " images vs " +
                          std::to_string(ln) + " labels");

    Dataset d;
    d.height = h;
    d.width = w;
    d.channels = 1;
    d.x = Matrix(n, h * w);
    double *out = d.x.data();
    const unsigned char *px = img.data() + 16;
    for (std::size_t i = 0; i < n * h * w; ++i) out[i] = px[i] / 255.0;
    d.labels.assign(lab.begin() + 8, lab.end());
    const std::uint32_t max_label =
        d.labels.empty() ? 0 : *std::max_element(d.labels.begin(), d.labels.end());
    d.label_names = digit_names(std::max<std::size_t>(10, max_label + 1));
    d.validate();
    return d;
}

Dataset load_cifar10(const std::vector<std::string> &batch_paths) {
    constexpr std::size_t kRecord = 3073; // label byte + 3x1024 channel bytes
    constexpr std::size_t kPixels = 3072;
    Dataset d;
    d.height = 32;
    d.width = 32;
    d.channels = 3;
    d.label_names = {"airplane", "automobile", "bird",  "cat",  "deer",
                     "dog",      "frog",       "horse", "ship", "truck"};

    std::size_t total = 0;
    std::vector<std::vector<unsigned char>> files;
    for (const auto &path : batch_paths) {
        files.push_back(read_file(path));
        if (files.back().empty() || files.back().size() % kRecord != 0)
            throw FormatError(path + ": size " + std::to_string(files.back().size()) +
                              " is not a multiple of " + std::to_string(kRecord));
        total += files.back().size() / kRecord;
    }
    d.x = Matrix(total, kPixels);
    d.labels.reserve(total);
    std::size_t row = 0;
    for (std::size_t f = 0; f < files.size(); ++f) {
        const auto &bytes = files[f];
        for (std::size_t off = 0; off < bytes.size(); off += kRecord, ++row) {
            const unsigned char label = bytes[off];
            if (label >= 10)
                throw FormatError(batch_paths[f] + ": label byte " + std::to_string(label) +
                                  " out of range");
            d.labels.push_back(label);
            double *out = d.x.row(row).data();
            for (std::size_t i = 0; i < kPixels; ++i) out[i] = bytes[off + 1 + i] / 255.0;
        }
    }
    d.validate();
    return d;
}

Dataset load_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.empty()) throw FormatError(path + ": empty header");
    std::size_t label_col = header.size() - 1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "label") label_col = i;

    std::vector<std::vector<double>> rows;
    std::vector<std::uint32_t> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> feats;
        feats.reserve(header.size() - 1);
        std::size_t col = 0;
        std::uint32_t label = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                if (col == label_col)
                    label = static_cast<std::uint32_t>(std::stoul(cell));
                else
                    feats.push_back(std::stod(cell));
            } catch (const std::exception &) {
                throw FormatError(path + ":" + std::to_string(line_no) + ": bad cell '" + cell +
                                  "'");
            }
            ++col;
        }
        if (col != header.size())
            throw FormatError(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " cells, found " +
                              std::to_string(col));
        rows.push_back(std::move(feats));
        labels.push_back(label);
    }
    if (rows.empty()) throw FormatError(path + ": no data rows");

    Dataset d;
    d.x = Matrix::from_rows(rows);
    d.labels = std::move(labels);
    d.height = d.x.cols();
    d.width = 1;
    d.channels = 1;
    const std::uint32_t max_label =
        *std::max_element(d.labels.begin(), d.labels.end());
    d.label_names = digit_names(max_label + 1);
    d.validate();
    return d;
}

Dataset load_container(const std::string &path) {
    const auto bytes = read_file(path);
    constexpr std::size_t kHeader = 8 + 7 * 4;
    if (bytes.size() < kHeader + 8) throw FormatError(path + ": truncated container");
    if (std::memcmp(bytes.data(), kContainerMagic, 8) != 0)
        throw FormatError(path + ": bad container magic");
    const unsigned char *p = bytes.data() + 8;
    const std::uint32_t version = read_le32(p);
    const std::uint32_t rows = read_le32(p + 4);
    const std::uint32_t features = read_le32(p + 8);
    const std::uint32_t height = read_le32(p + 12);
    const std::uint32_t width = read_le32(p + 16);
    const std::uint32_t channels = read_le32(p + 20);
    const std::uint32_t vocab = read_le32(p + 24);
    if (version != kContainerVersion)
        throw FormatError(path + ": container version " + std::to_string(version) +
                          " unsupported");

    const std::size_t expected = kHeader + std::size_t(rows) * features * 4 + std::size_t(rows) * 4 + 8;
    if (bytes.size() != expected)
        throw FormatError(path + ": payload length " + std::to_string(bytes.size()) +
                          " does not match header-declared " + std::to_string(expected));

    const std::uint64_t declared = read_le64(bytes.data() + bytes.size() - 8);
    const std::uint64_t actual = byte_sum(bytes.data(), bytes.size() - 8);
    if (declared != actual)
        throw FormatError(path + ": checksum mismatch (stored " + std::to_string(declared) +
                          ", computed " + std::to_string(actual) + ")");

    Dataset d;
    d.height = height;
    d.width = width;
    d.channels = channels;
    d.label_names = digit_names(vocab);
    d.x = Matrix(rows, features);
    const unsigned char *fp = bytes.data() + kHeader;
    double *out = d.x.data();
    for (std::size_t i = 0; i < std::size_t(rows) * features; ++i) {
        std::uint32_t bits = read_le32(fp + i * 4);
        float f;
        std::memcpy(&f, &bits, 4);
        out[i] = f;
    }
    const unsigned char *lp = fp + std::size_t(rows) * features * 4;
    d.labels.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) d.labels[i] = read_le32(lp + i * 4);
    d.validate();
    return d;
}

void save_container(const Dataset &d, const std::string &path) {
    d.validate();
    std::vector<unsigned char> out;
    out.reserve(8 + 28 + d.x.size() * 4 + d.labels.size() * 4 + 8);
    out.insert(out.end(), kContainerMagic, kContainerMagic + 8);
    append_le32(out, kContainerVersion);
    append_le32(out, static_cast<std::uint32_t>(d.rows()));
    append_le32(out, static_cast<std::uint32_t>(d.feature_count()));
    append_le32(out, static_cast<std::uint32_t>(d.height));
    append_le32(out, static_cast<std::uint32_t>(d.width));
    append_le32(out, static_cast<std::uint32_t>(d.channels));
    append_le32(out, static_cast<std::uint32_t>(d.num_classes()));
    const double *p = d.x.data();
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        const float f = static_cast<float>(p[i]);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        append_le32(out, bits);
    }
    for (std::uint32_t l : d.labels) append_le32(out, l);
    append_le64(out, byte_sum(out.data(), out.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot write " + path);
    f.write(reinterpret_cast<const char *>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError("failed writing " + path);
}

Dataset to_grayscale(const Dataset &d) {
    if (d.channels != 3)
        throw ShapeError("to_grayscale: expected 3 channels, found " +
                         std::to_string(d.channels));
    const std::size_t plane = d.height * d.width;
    Dataset out;
    out.height = d.height;
    out.width = d.width;
    out.channels = 1;
    out.labels = d.labels;
    out.label_names = d.label_names;
    out.x = Matrix(d.rows(), plane);
    for (std::size_t r = 0; r < d.rows(); ++r) {
        const auto src = d.x.row(r);
        auto dst = out.x.row(r);
        for (std::size_t i = 0; i < plane; ++i)
            dst[i] = 0.299 * src[i] + 0.587 * src[plane + i] + 0.114 * src[2 * plane + i];
    }
    out.validate();
    return out;
}

Dataset resize(const Dataset &d, std::size_t out_h, std::size_t out_w) {
    if (out_h == 0 || out_w == 0) throw ArgumentError("resize: target dims must be positive");
    if (d.height == 0 || d.width == 0) throw ShapeError("resize: source dims unknown");

    Dataset out;
    out.height = out_h;
    out.width = out_w;
    out.channels = d.channels;
    out.labels = d.labels;
    out.label_names = d.label_names;
    out.x = Matrix(d.rows(), out_h * out_w * d.channels);

    const double sy = static_cast<double>(d.height) / static_cast<double>(out_h);
    const double sx = static_cast<double>(d.width) / static_cast<double>(out_w);
    const std::size_t in_plane = d.height * d.width;
    const std::size_t out_plane = out_h * out_w;

    // Precompute per-axis neighbor indices and weights (half-pixel centers).
    std::vector<std::size_t> y0(out_h), y1(out_h), x0(out_w), x1(out_w);
    std::vector<double> wy(out_h), wx(out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        double src = (y + 0.5) * sy - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(d.height - 1));
        y0[y] = static_cast<std::size_t>(src);
        y1[y] = std::min(y0[y] + 1, d.height - 1);
        wy[y] = src - static_cast<double>(y0[y]);
    }
    for (std::size_t x = 0; x < out_w; ++x) {
        double src = (x + 0.5) * sx - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(d.width - 1));
        x0[x] = static_cast<std::size_t>(src);
        x1[x] = std::min(x0[x] + 1, d.width - 1);
        wx[x] = src - static_cast<double>(x0[x]);
    }

    for (std::size_t r = 0; r < d.rows(); ++r) {
        const auto src = d.x.row(r);
        auto dst = out.x.row(r);
        for (std::size_t c = 0; c < d.channels; ++c) {
            const double *plane = src.data() + c * in_plane;
            double *oplane = dst.data() + c * out_plane;
            for (std::size_t y = 0; y < out_h; ++y) {
                const double fy = wy[y];
                const double *r0 = plane + y0[y] * d.width;
                const double *r1 = plane + y1[y] * d.width;
                for (std::size_t x = 0; x < out_w; ++x) {
                    const double fx = wx[x];
                    const double top = r0[x0[x]] * (1.0 - fx) + r0[x1[x]] * fx;
                    const double bot = r1[x0[x]] * (1.0 - fx) + r1[x1[x]] * fx;
                    oplane[y * out_w + x] = top * (1.0 - fy) + bot * fy;
                }
            }
        }
    }
    out.validate();
    return out;
}

Dataset take_rows(const Dataset &d, const std::vector<std::size_t> &indices) {
    Dataset out;
    out.height = d.height;
    out.width = d.width;
    out.channels = d.channels;
    out.label_names = d.label_names;
    out.x = Matrix(indices.size(), d.feature_count());
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= d.rows()) throw ArgumentError("take_rows: index out of range");
        std::copy(d.x.row(src).begin(), d.x.row(src).end(), out.x.row(i).begin());
        out.labels.push_back(d.labels[src]);
    }
    return out;
}

Dataset subsample(const Dataset &d, std::size_t n, std::uint64_t seed) {
    if (n > d.rows())
        throw ArgumentError("subsample: requested " + std::to_string(n) + " of " +
                            std::to_string(d.rows()) + " rows");
    std::vector<std::size_t> order(d.rows());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    order.resize(n);
    std::sort(order.begin(), order.end());
    return take_rows(d, order);
}

Dataset filter_classes(const Dataset &d, const std::vector<std::uint32_t> &keep, bool relabel) {
    std::vector<std::int64_t> remap(d.num_classes(), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i] >= d.num_classes()) throw ArgumentError("filter_classes: unknown class");
        remap[keep[i]] = relabel ? static_cast<std::int64_t>(i)
                                 : static_cast<std::int64_t>(keep[i]);
    }
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < d.rows(); ++r)
        if (remap[d.labels[r]] >= 0) rows.push_back(r);
    Dataset out = take_rows(d, rows);
    if (relabel) {
        for (auto &l : out.labels) l = static_cast<std::uint32_t>(remap[l]);
        out.label_names.clear();
        for (std::uint32_t k : keep) out.label_names.push_back(d.label_names[k]);
    }
    return out;
}

Matrix one_hot(const std::vector<std::uint32_t> &labels, std::size_t num_classes) {
    Matrix m(labels.size(), num_classes);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] >= num_classes) throw ArgumentError("one_hot: label out of range");
        m(r, labels[r]) = 1.0;
    }
    return m;
}

namespace {

std::vector<std::vector<std::size_t>> shuffled_indices_by_class(const Dataset &d,
                                                                std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> by_class(d.num_classes());
    for (std::size_t r = 0; r < d.rows(); ++r) by_class[d.labels[r]].push_back(r);
    Rng rng(seed);
    for (auto &idx : by_class) rng.shuffle(idx);
    return by_class;
}

Fold make_fold(const Dataset &d, std::vector<std::size_t> train_idx,
               std::vector<std::size_t> test_idx) {
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {take_rows(d, train_idx), take_rows(d, test_idx)};
}

} // namespace

std::vector<Fold> split(const Dataset &d, const SplitPlan &plan) {
    d.validate();
    switch (plan.kind) {
    case SplitKind::KFold: {
        if (plan.folds < 2) throw ArgumentError("split: kfold needs at least 2 folds");
        if (plan.folds > d.rows()) throw ArgumentError("split: more folds than samples");
        const auto by_class = shuffled_indices_by_class(d, plan.seed);
        std::vector<std::vector<std::size_t>> fold_rows(plan.folds);
        for (const auto &idx : by_class)
            for (std::size_t i = 0; i < idx.size(); ++i)
                fold_rows[i % plan.folds].push_back(idx[i]);
        std::vector<Fold> folds;
        for (std::size_t f = 0; f < plan.folds; ++f) {
            std::vector<std::size_t> train;
            for (std::size_t g = 0; g < plan.folds; ++g)
                if (g != f) train.insert(train.end(), fold_rows[g].begin(), fold_rows[g].end());
            folds.push_back(make_fold(d, std::move(train), fold_rows[f]));
        }
        return folds;
    }
    case SplitKind::Holdout: {
        if (!(plan.holdout_fraction > 0.0 && plan.holdout_fraction < 1.0))
            throw ArgumentError("split: holdout fraction must lie in (0, 1)");
        const auto by_class = shuffled_indices_by_class(d, plan.seed);
        std::vector<std::size_t> train, test;
        for (const auto &idx : by_class) {
            if (idx.empty()) continue;
            std::size_t n_test = static_cast<std::size_t>(
                std::llround(plan.holdout_fraction * static_cast<double>(idx.size())));
            n_test = std::min(n_test, idx.size() - 1); // keep every class trainable
            for (std::size_t i = 0; i < idx.size(); ++i)
                (i < n_test ? test : train).push_back(idx[i]);
        }
        std::vector<Fold> folds;
        folds.push_back(make_fold(d, std::move(train), std::move(test)));
        return folds;
    }
    case SplitKind::PerClassSubsample: {
        if (plan.per_class_counts.size() != d.num_classes())
            throw ArgumentError("split: need one per-class count per label (" +
                                std::to_string(d.num_classes()) + ")");
        const auto counts = d.class_counts();
        std::string shortfalls;
        for (std::size_t l = 0; l < counts.size(); ++l)
            if (plan.per_class_counts[l] > counts[l])
                shortfalls += " class " + std::to_string(l) + ": requested " +
                              std::to_string(plan.per_class_counts[l]) + " of " +
                              std::to_string(counts[l]);
        if (!shortfalls.empty()) throw ArgumentError("split: infeasible counts:" + shortfalls);

        const auto by_class = shuffled_indices_by_class(d, plan.seed);
        std::vector<std::size_t> train, test;
        for (std::size_t l = 0; l < by_class.size(); ++l) {
            for (std::size_t i = 0; i < by_class[l].size(); ++i)
                (i < plan.per_class_counts[l] ? train : test).push_back(by_class[l][i]);
        }
        std::vector<Fold> folds;
        folds.push_back(make_fold(d, std::move(train), std::move(test)));
        return folds;
    }
    }
    throw ArgumentError("split: unknown plan kind");
}

} // namespace atdl
