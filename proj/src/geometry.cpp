#include "n2i/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace n2i {

Geometry make_geometry(int n_angles, int detector_count, int image_size, double arc) {
    if (n_angles < 1 || detector_count < 1 || image_size < 1)
        throw std::invalid_argument("make_geometry: counts must be positive");
    if (!(arc > 0.0) || arc > std::numbers::pi)
        throw std::invalid_argument("make_geometry: arc must lie in (0, pi], got " +
                                    std::to_string(arc));
    Geometry g;
    g.arc = arc;
    g.angles.resize(n_angles);
    for (int j = 0; j < n_angles; ++j) g.angles[j] = arc * j / n_angles;
    g.detector_count = detector_count;
    g.detector_pixel_size = 2.0 * std::numbers::sqrt2 / detector_count;
    g.image_size = image_size;
    g.pixel_size = 2.0 / image_size;
    return g;
}

int default_detector_count(int image_size) {
    return static_cast<int>(std::ceil(std::numbers::sqrt2 * image_size));
}

Geometry Geometry::subset(int K, int section) const {
    if (K < 1 || section < 0 || section >= K)
        throw std::invalid_argument("Geometry::subset: need 0 <= section < K");
    if (n_angles() % K != 0)
        throw std::invalid_argument("Geometry::subset: K = " + std::to_string(K) +
                                    " does not divide n_angles = " + std::to_string(n_angles()));
    Geometry g = *this;
    g.angles.clear();
    for (int j = section; j < n_angles(); j += K) g.angles.push_back(angles[j]);
    return g;
}

}  // namespace n2i
