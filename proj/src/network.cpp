#include "n2i/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "n2i/rng.hpp"

namespace n2i {
namespace {

constexpr const char* kCheckpointMagic = "n2i-checkpoint";
constexpr int kCheckpointVersion = 1;

int mirror(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

// Copies `image` into the centre of a (rows + 2 pad) x (cols + 2 pad) buffer
// and fills the border by reflection.
void pad_reflect(const double* image, int rows, int cols, int pad, double* out) {
    const int stride = cols + 2 * pad;
    for (int y = -pad; y < rows + pad; ++y) {
        const double* src = image + static_cast<std::size_t>(mirror(y, rows)) * cols;
        double* dst = out + static_cast<std::size_t>(y + pad) * stride;
        for (int x = -pad; x < 0; ++x) dst[x + pad] = src[mirror(x, cols)];
        std::memcpy(dst + pad, src, sizeof(double) * cols);
        for (int x = cols; x < cols + pad; ++x) dst[x + pad] = src[mirror(x, cols)];
    }
}

// Adjoint of pad_reflect: adds every border entry onto the interior pixel it
// was copied from. The interior of `buffer` then holds the folded gradient.
void fold_reflect(double* buffer, int rows, int cols, int pad) {
    const int stride = cols + 2 * pad;
    for (int y = 0; y < rows + 2 * pad; ++y) {
        double* row = buffer + static_cast<std::size_t>(y) * stride;
        for (int x = -pad; x < 0; ++x) row[pad + mirror(x, cols)] += row[x + pad];
        for (int x = cols; x < cols + pad; ++x) row[pad + mirror(x, cols)] += row[x + pad];
    }
    for (int y = -pad; y < 0; ++y) {
        const double* src = buffer + static_cast<std::size_t>(y + pad) * stride + pad;
        double* dst = buffer + static_cast<std::size_t>(mirror(y, rows) + pad) * stride + pad;
        for (int x = 0; x < cols; ++x) dst[x] += src[x];
    }
    for (int y = rows; y < rows + pad; ++y) {
        const double* src = buffer + static_cast<std::size_t>(y + pad) * stride + pad;
        double* dst = buffer + static_cast<std::size_t>(mirror(y, rows) + pad) * stride + pad;
        for (int x = 0; x < cols; ++x) dst[x] += src[x];
    }
}

}  // namespace

int NetworkConfig::max_dilation() const {
    int m = 1;
    for (int i = 0; i < depth; ++i) m = std::max(m, dilation(i));
    return m;
}

std::size_t NetworkConfig::parameter_count() const {
    std::size_t n = 0;
    for (int i = 1; i <= depth; ++i) n += 9 * static_cast<std::size_t>(i) + 1;
    return n + static_cast<std::size_t>(depth + 1) + 1;
}

void NetworkConfig::validate() const {
    if (depth < 1) throw std::invalid_argument("NetworkConfig: depth must be >= 1");
    if (dilation_cycle < 1) throw std::invalid_argument("NetworkConfig: dilation cycle must be >= 1");
}

Network::Network(const NetworkConfig& config) : config_(config) {
    config_.validate();
    params_.assign(config_.parameter_count(), 0.0);
    std::mt19937_64 gen(derive_seed(config_.seed, 0x6e6574));
    for (int layer = 0; layer < config_.depth; ++layer) {
        std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / (9.0 * (layer + 1))));
        for (double& w : layer_weights(layer)) w = normal(gen);
    }
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / (config_.depth + 1)));
    for (double& w : output_weights()) w = normal(gen);
}

std::size_t Network::layer_offset(int layer) const {
    std::size_t off = 0;
    for (int i = 0; i < layer; ++i) off += 9 * static_cast<std::size_t>(i + 1) + 1;
    return off;
}

std::size_t Network::output_offset() const { return layer_offset(config_.depth); }

std::span<double> Network::layer_weights(int layer) {
    return std::span<double>(params_).subspan(layer_offset(layer), 9 * static_cast<std::size_t>(layer + 1));
}

double& Network::layer_bias(int layer) { return params_[layer_offset(layer) + 9 * static_cast<std::size_t>(layer + 1)]; }

std::span<double> Network::output_weights() {
    return std::span<double>(params_).subspan(output_offset(), config_.depth + 1);
}

double& Network::output_bias() { return params_[output_offset() + config_.depth + 1]; }

Image Network::forward(const Image& input) const {
    Trace trace;
    return forward(input, trace);
}

Image Network::forward(const Image& input, Trace& trace) const {
    const int rows = input.rows(), cols = input.cols();
    if (rows < 1 || cols < 1) throw std::invalid_argument("Network::forward: empty image");
    const int pad = config_.max_dilation();
    const int stride = cols + 2 * pad;
    const std::size_t padded = static_cast<std::size_t>(rows + 2 * pad) * stride;
    const int depth = config_.depth;

    trace.rows_ = rows;
    trace.cols_ = cols;
    trace.pad_ = pad;
    trace.features_.resize(depth + 1);
    for (auto& f : trace.features_) f.resize(padded);
    pad_reflect(input.values().data(), rows, cols, pad, trace.features_[0].data());

    std::vector<double> pre(static_cast<std::size_t>(rows) * cols);
    for (int layer = 0; layer < depth; ++layer) {
        const std::size_t off = layer_offset(layer);
        const double* weights = params_.data() + off;
        const double bias = params_[off + 9 * static_cast<std::size_t>(layer + 1)];
        const int d = config_.dilation(layer);
        std::fill(pre.begin(), pre.end(), bias);
        for (int ch = 0; ch <= layer; ++ch) {
            const double* w = weights + 9 * ch;
            const double* base = trace.features_[ch].data() + pad;
            for (int y = 0; y < rows; ++y) {
                double* __restrict dst = pre.data() + static_cast<std::size_t>(y) * cols;
                const double* up = base + static_cast<std::size_t>(y + pad - d) * stride;
                const double* mid = base + static_cast<std::size_t>(y + pad) * stride;
                const double* down = base + static_cast<std::size_t>(y + pad + d) * stride;
                for (int x = 0; x < cols; ++x) {
                    dst[x] += w[0] * up[x - d] + w[1] * up[x] + w[2] * up[x + d] +
                              w[3] * mid[x - d] + w[4] * mid[x] + w[5] * mid[x + d] +
                              w[6] * down[x - d] + w[7] * down[x] + w[8] * down[x + d];
                }
            }
        }
        for (double& v : pre) v = v > 0.0 ? v : 0.0;
        pad_reflect(pre.data(), rows, cols, pad, trace.features_[layer + 1].data());
    }

    Image out(rows, cols, params_[output_offset() + depth + 1]);
    const double* w_out = params_.data() + output_offset();
    for (int ch = 0; ch <= depth; ++ch) {
        const double w = w_out[ch];
        const double* base = trace.features_[ch].data() + pad;
        for (int y = 0; y < rows; ++y) {
            double* __restrict dst = out.row(y);
            const double* src = base + static_cast<std::size_t>(y + pad) * stride;
            for (int x = 0; x < cols; ++x) dst[x] += w * src[x];
        }
    }
    return out;
}

void Network::backward(const Trace& trace, const Image& output_gradient, std::span<double> gradients) const {
    if (trace.empty()) throw std::logic_error("Network::backward: no forward pass recorded");
    if (output_gradient.rows() != trace.rows_ || output_gradient.cols() != trace.cols_)
        throw std::invalid_argument("Network::backward: gradient shape does not match forward pass");
    if (gradients.size() != params_.size())
        throw std::invalid_argument("Network::backward: gradient buffer has wrong size");

    const int rows = trace.rows_, cols = trace.cols_, pad = trace.pad_;
    const int stride = cols + 2 * pad;
    const std::size_t padded = static_cast<std::size_t>(rows + 2 * pad) * stride;
    const int depth = config_.depth;
    const std::size_t out_off = output_offset();

    // Gradients with respect to the padded hidden features (channel 0 is the
    // input and needs no gradient).
    std::vector<std::vector<double>> feature_grad(depth + 1);
    for (int ch = 1; ch <= depth; ++ch) feature_grad[ch].assign(padded, 0.0);

    double bias_sum = 0.0;
    for (double g : output_gradient.values()) bias_sum += g;
    gradients[out_off + depth + 1] += bias_sum;
    for (int ch = 0; ch <= depth; ++ch) {
        const double* base = trace.features_[ch].data() + pad;
        double dot = 0.0;
        for (int y = 0; y < rows; ++y) {
            const double* src = base + static_cast<std::size_t>(y + pad) * stride;
            const double* g = output_gradient.row(y);
            double row_dot = 0.0;
            for (int x = 0; x < cols; ++x) row_dot += g[x] * src[x];
            dot += row_dot;
        }
        gradients[out_off + ch] += dot;
        if (ch == 0) continue;
        const double w = params_[out_off + ch];
        double* gbase = feature_grad[ch].data() + pad;
        for (int y = 0; y < rows; ++y) {
            double* __restrict dst = gbase + static_cast<std::size_t>(y + pad) * stride;
            const double* g = output_gradient.row(y);
            for (int x = 0; x < cols; ++x) dst[x] += w * g[x];
        }
    }

    std::vector<double> dpre(static_cast<std::size_t>(rows) * cols);
    std::vector<double> acc(9 * static_cast<std::size_t>(cols));
    for (int layer = depth - 1; layer >= 0; --layer) {
        const int out_ch = layer + 1;
        double* fg = feature_grad[out_ch].data();
        fold_reflect(fg, rows, cols, pad);
        const double* act = trace.features_[out_ch].data();
        double bias_grad = 0.0;
        for (int y = 0; y < rows; ++y) {
            const std::size_t prow = static_cast<std::size_t>(y + pad) * stride + pad;
            double* dst = dpre.data() + static_cast<std::size_t>(y) * cols;
            for (int x = 0; x < cols; ++x) dst[x] = act[prow + x] > 0.0 ? fg[prow + x] : 0.0;
            for (int x = 0; x < cols; ++x) bias_grad += dst[x];
        }
        feature_grad[out_ch].clear();
        feature_grad[out_ch].shrink_to_fit();

        const std::size_t off = layer_offset(layer);
        gradients[off + 9 * static_cast<std::size_t>(layer + 1)] += bias_grad;
        const int d = config_.dilation(layer);
        const std::ptrdiff_t offsets[9] = {
            -static_cast<std::ptrdiff_t>(d) * stride - d, -static_cast<std::ptrdiff_t>(d) * stride,
            -static_cast<std::ptrdiff_t>(d) * stride + d, -d, 0, d,
            static_cast<std::ptrdiff_t>(d) * stride - d, static_cast<std::ptrdiff_t>(d) * stride,
            static_cast<std::ptrdiff_t>(d) * stride + d};

        for (int ch = 0; ch <= layer; ++ch) {
            const double* w = params_.data() + off + 9 * ch;
            const double* feat = trace.features_[ch].data();
            double* gfeat = ch > 0 ? feature_grad[ch].data() : nullptr;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int y = 0; y < rows; ++y) {
                const double* __restrict g = dpre.data() + static_cast<std::size_t>(y) * cols;
                const std::size_t centre = static_cast<std::size_t>(y + pad) * stride + pad;
                for (int tap = 0; tap < 9; ++tap) {
                    const double* __restrict src = feat + centre + offsets[tap];
                    double* __restrict a = acc.data() + static_cast<std::size_t>(tap) * cols;
                    for (int x = 0; x < cols; ++x) a[x] += g[x] * src[x];
                }
                if (gfeat) {
                    for (int tap = 0; tap < 9; ++tap) {
                        double* __restrict dst = gfeat + centre + offsets[tap];
                        const double wt = w[tap];
                        for (int x = 0; x < cols; ++x) dst[x] += wt * g[x];
                    }
                }
            }
            for (int tap = 0; tap < 9; ++tap) {
                const double* a = acc.data() + static_cast<std::size_t>(tap) * cols;
                double s = 0.0;
                for (int x = 0; x < cols; ++x) s += a[x];
                gradients[off + 9 * ch + tap] += s;
            }
        }
    }
}

Image Network::denoise(const Image& input) const {
    const Normalization n = normalization.value_or(Normalization{});
    Image scaled(input.rows(), input.cols());
    for (std::size_t i = 0; i < input.size(); ++i) scaled[i] = (input[i] - n.mean) / n.scale;
    Image out = forward(scaled);
    for (double& v : out.values()) v = v * n.scale + n.mean;
    return out;
}

namespace {

void write_doubles(std::ostream& out, std::span<const double> values) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    for (double v : values) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        unsigned char bytes[8];
        for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
}

std::vector<double> read_doubles(std::istream& in, std::size_t count) {
    std::vector<double> values(count);
    for (double& v : values) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8))
            throw std::runtime_error("checkpoint: truncated parameter block");
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
        v = std::bit_cast<double>(bits);
    }
    return values;
}

}  // namespace

void Network::save(std::ostream& out) const {
    std::ostringstream header;
    header << std::setprecision(std::numeric_limits<double>::max_digits10);
    header << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    header << "depth " << config_.depth << '\n';
    header << "dilation_cycle " << config_.dilation_cycle << '\n';
    header << "seed " << config_.seed << '\n';
    header << "parameter_count " << params_.size() << '\n';
    header << "adam_step " << adam.step << '\n';
    if (normalization) header << "normalization " << normalization->mean << ' ' << normalization->scale << '\n';
    if (scheme) header << "scheme " << scheme->k << ' ' << to_string(scheme->strategy) << '\n';
    header << "end_header\n";
    out << header.str();
    // Little-endian float64: parameters, then Adam first and second moments.
    write_doubles(out, params_);
    const bool has_moments = adam.first_moment.size() == params_.size();
    const std::vector<double> zeros(params_.size(), 0.0);
    write_doubles(out, has_moments ? std::span<const double>(adam.first_moment) : zeros);
    write_doubles(out, has_moments ? std::span<const double>(adam.second_moment) : zeros);
    if (!out) throw std::runtime_error("checkpoint: write failed");
}

Network Network::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: empty stream");
    {
        std::istringstream first(line);
        std::string magic;
        int version = 0;
        first >> magic >> version;
        if (magic != kCheckpointMagic) throw std::runtime_error("checkpoint: bad magic");
        if (version != kCheckpointVersion)
            throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    NetworkConfig config;
    std::size_t count = 0;
    long step = 0;
    std::optional<Normalization> norm;
    std::optional<SplitScheme> scheme;
    while (std::getline(in, line) && line != "end_header") {
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        if (key == "depth") fields >> config.depth;
        else if (key == "dilation_cycle") fields >> config.dilation_cycle;
        else if (key == "seed") fields >> config.seed;
        else if (key == "parameter_count") fields >> count;
        else if (key == "adam_step") fields >> step;
        else if (key == "normalization") {
            Normalization n;
            fields >> n.mean >> n.scale;
            norm = n;
        } else if (key == "scheme") {
            SplitScheme s;
            std::string strategy;
            fields >> s.k >> strategy;
            s.strategy = parse_strategy(strategy);
            scheme = s;
        }
        if (fields.fail()) throw std::runtime_error("checkpoint: malformed header line '" + line + "'");
    }
    if (line != "end_header") throw std::runtime_error("checkpoint: missing end_header");
    Network net(config);
    if (count != net.params_.size())
        throw std::runtime_error("checkpoint: parameter count does not match configuration");
    net.params_ = read_doubles(in, count);
    net.adam.first_moment = read_doubles(in, count);
    net.adam.second_moment = read_doubles(in, count);
    net.adam.step = step;
    net.normalization = norm;
    net.scheme = scheme;
    return net;
}

}  // namespace n2i
