#include "n2i/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "n2i/rng.hpp"

namespace n2i {
namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw std::invalid_argument("bad number '" + text + "'");
    return value;
}

NoiseDomain parse_domain(const std::string& text) {
    if (text == "sinogram") return NoiseDomain::sinogram;
    if (text == "image") return NoiseDomain::image;
    throw std::invalid_argument("bad noise domain '" + text + "'");
}

std::string domain_name(NoiseDomain d) { return d == NoiseDomain::sinogram ? "sinogram" : "image"; }

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        t["run.id"] = [](RunConfig& c, const std::string& v) { c.run_id = v; };
        t["run.seed"] = [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v); };
        t["run.output"] = [](RunConfig& c, const std::string& v) { c.output = v; };
        t["phantom.image_size"] = [](RunConfig& c, const std::string& v) { c.phantom.image_size = parse_number<int>(v); };
        t["phantom.slices"] = [](RunConfig& c, const std::string& v) { c.phantom.slices = parse_number<int>(v); };
        t["phantom.bubbles"] = [](RunConfig& c, const std::string& v) { c.phantom.bubbles = parse_number<int>(v); };
        t["phantom.min_radius"] = [](RunConfig& c, const std::string& v) { c.phantom.min_radius = parse_number<double>(v); };
        t["phantom.max_radius"] = [](RunConfig& c, const std::string& v) { c.phantom.max_radius = parse_number<double>(v); };
        t["phantom.cylinder_radius"] = [](RunConfig& c, const std::string& v) { c.phantom.cylinder_radius = parse_number<double>(v); };
        t["geometry.n_angles"] = [](RunConfig& c, const std::string& v) { c.geometry.n_angles = parse_number<int>(v); };
        t["geometry.detector_count"] = [](RunConfig& c, const std::string& v) { c.geometry.detector_count = parse_number<int>(v); };
        t["geometry.arc_degrees"] = [](RunConfig& c, const std::string& v) { c.geometry.arc_degrees = parse_number<double>(v); };
        t["noise.model"] = [](RunConfig& c, const std::string& v) { c.noise.model = v; };
        t["noise.alpha"] = [](RunConfig& c, const std::string& v) { c.noise.alpha = parse_number<double>(v); };
        t["noise.photon_count"] = [](RunConfig& c, const std::string& v) { c.noise.photon_count = parse_number<double>(v); };
        t["noise.sigma"] = [](RunConfig& c, const std::string& v) { c.noise.sigma = parse_number<double>(v); };
        t["noise.domain"] = [](RunConfig& c, const std::string& v) { c.noise.domain = parse_domain(v); };
        t["split.k"] = [](RunConfig& c, const std::string& v) { c.split.k = parse_number<int>(v); };
        t["split.strategy"] = [](RunConfig& c, const std::string& v) { c.split.strategy = parse_strategy(v); };
        t["network.depth"] = [](RunConfig& c, const std::string& v) { c.network.depth = parse_number<int>(v); };
        t["network.dilation_cycle"] = [](RunConfig& c, const std::string& v) { c.network.dilation_cycle = parse_number<int>(v); };
        t["train.epochs"] = [](RunConfig& c, const std::string& v) { c.train.epochs = parse_number<int>(v); };
        t["train.batch_size"] = [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_number<int>(v); };
        t["train.learning_rate"] = [](RunConfig& c, const std::string& v) { c.train.learning_rate = parse_number<double>(v); };
        t["train.mask_stride"] = [](RunConfig& c, const std::string& v) { c.mask_stride = parse_number<int>(v); };
        t["train.masks_per_slice"] = [](RunConfig& c, const std::string& v) { c.masks_per_slice = parse_number<int>(v); };
        t["baseline.sirt_iterations"] = [](RunConfig& c, const std::string& v) { c.baseline.sirt_iterations = parse_number<int>(v); };
        t["baseline.tv_iterations"] = [](RunConfig& c, const std::string& v) { c.baseline.tv_iterations = parse_number<int>(v); };
        t["baseline.tv_inner_iterations"] = [](RunConfig& c, const std::string& v) { c.baseline.tv_inner_iterations = parse_number<int>(v); };
        t["baseline.lambda_min"] = [](RunConfig& c, const std::string& v) { c.baseline.lambda_min = parse_number<double>(v); };
        t["baseline.lambda_ratio"] = [](RunConfig& c, const std::string& v) { c.baseline.lambda_ratio = parse_number<double>(v); };
        t["baseline.lambda_count"] = [](RunConfig& c, const std::string& v) { c.baseline.lambda_count = parse_number<int>(v); };
        return t;
    }();
    return table;
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + what);
}

}  // namespace

void RunConfig::validate() const {
    require(!run_id.empty() && run_id.find_first_of(" \t,\n") == std::string::npos,
            "run.id must be a non-empty token without spaces or commas");
    require(phantom.image_size >= 11, "phantom.image_size must be >= 11");
    require(phantom.slices >= 1, "phantom.slices must be >= 1");
    require(phantom.bubbles >= 0, "phantom.bubbles must be >= 0");
    require(phantom.min_radius > 0 && phantom.min_radius <= phantom.max_radius,
            "phantom radii must satisfy 0 < min_radius <= max_radius");
    require(phantom.cylinder_radius > phantom.max_radius && phantom.cylinder_radius <= 1.0,
            "phantom.cylinder_radius must exceed max_radius and be <= 1");
    require(geometry.n_angles >= 1, "geometry.n_angles must be >= 1");
    require(geometry.detector_count >= 0, "geometry.detector_count must be >= 0");
    require(geometry.arc_degrees > 0 && geometry.arc_degrees <= 180, "geometry.arc_degrees must be in (0, 180]");
    require(noise.model == "poisson" || noise.model == "gaussian", "noise.model must be poisson or gaussian");
    if (noise.model == "poisson") {
        require(noise.photon_count > 0, "noise.photon_count must be > 0");
        require(noise.alpha >= 0 && noise.alpha < 1, "noise.alpha must be in [0, 1)");
    } else {
        require(noise.sigma > 0, "noise.sigma must be > 0");
    }
    require(split.k >= 2, "split.k must be >= 2");
    require(geometry.n_angles % split.k == 0, "split.k must divide geometry.n_angles");
    network.validate();
    train.validate();
    require(mask_stride >= 2, "train.mask_stride must be >= 2");
    require(masks_per_slice >= 1, "train.masks_per_slice must be >= 1");
    require(baseline.sirt_iterations >= 1 && baseline.tv_iterations >= 1 && baseline.tv_inner_iterations >= 1,
            "baseline iteration counts must be >= 1");
    require(baseline.lambda_min > 0 && baseline.lambda_ratio > 1 && baseline.lambda_count >= 1,
            "baseline lambda grid must have lambda_min > 0, lambda_ratio > 1, lambda_count >= 1");
}

NoiseModel RunConfig::noise_model() const {
    if (noise.model == "poisson") return PoissonNoise{noise.photon_count};
    return GaussianNoise{noise.sigma, noise.domain};
}

std::uint64_t RunConfig::stage_seed(std::uint64_t stage) const { return derive_seed(seed, stage); }

RunConfig parse_config(std::istream& in) {
    RunConfig config;
    std::string section;
    std::set<std::string> seen;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const std::string where = "config line " + std::to_string(number) + ": ";
        if (text.front() == '[') {
            if (text.back() != ']') throw std::invalid_argument(where + "unterminated section header");
            section = trim(text.substr(1, text.size() - 2));
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw std::invalid_argument(where + "expected key = value");
        const std::string key = section + "." + trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw std::invalid_argument(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw std::invalid_argument(where + "duplicate key '" + key + "'");
        try {
            it->second(config, value);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + key + ": " + e.what());
        }
    }
    config.validate();
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    return parse_config(in);
}

std::string write_config(const RunConfig& c) {
    std::ostringstream o;
    auto d = format_double;
    o << "[run]\nid = " << c.run_id << "\nseed = " << c.seed << "\noutput = " << c.output << "\n\n";
    o << "[phantom]\nimage_size = " << c.phantom.image_size << "\nslices = " << c.phantom.slices
      << "\nbubbles = " << c.phantom.bubbles << "\nmin_radius = " << d(c.phantom.min_radius)
      << "\nmax_radius = " << d(c.phantom.max_radius) << "\ncylinder_radius = " << d(c.phantom.cylinder_radius)
      << "\n\n";
    o << "[geometry]\nn_angles = " << c.geometry.n_angles << "\ndetector_count = " << c.geometry.detector_count
      << "\narc_degrees = " << d(c.geometry.arc_degrees) << "\n\n";
    o << "[noise]\nmodel = " << c.noise.model << "\nalpha = " << d(c.noise.alpha)
      << "\nphoton_count = " << d(c.noise.photon_count) << "\nsigma = " << d(c.noise.sigma)
      << "\ndomain = " << domain_name(c.noise.domain) << "\n\n";
    o << "[split]\nk = " << c.split.k << "\nstrategy = " << to_string(c.split.strategy) << "\n\n";
    o << "[network]\ndepth = " << c.network.depth << "\ndilation_cycle = " << c.network.dilation_cycle << "\n\n";
    o << "[train]\nepochs = " << c.train.epochs << "\nbatch_size = " << c.train.batch_size
      << "\nlearning_rate = " << d(c.train.learning_rate) << "\nmask_stride = " << c.mask_stride
      << "\nmasks_per_slice = " << c.masks_per_slice << "\n\n";
    o << "[baseline]\nsirt_iterations = " << c.baseline.sirt_iterations
      << "\ntv_iterations = " << c.baseline.tv_iterations
      << "\ntv_inner_iterations = " << c.baseline.tv_inner_iterations
      << "\nlambda_min = " << d(c.baseline.lambda_min) << "\nlambda_ratio = " << d(c.baseline.lambda_ratio)
      << "\nlambda_count = " << c.baseline.lambda_count << "\n";
    return o.str();
}

std::string config_hash(const RunConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : write_config(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace n2i
