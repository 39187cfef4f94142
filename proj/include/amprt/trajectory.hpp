#pragma once

#include <string>
#include <vector>

namespace amprt {

// g(y, yhat) = yhat. Shared by the GMM and GLM aggregator variants.
struct Identity {};

struct TrajectoryPoint {
    int t = 0;
    double test_error = 0.0;
    // mu^T theta / ||theta|| for the GMM, rho = beta^T theta / (||beta|| ||theta||) for the GLM.
    double overlap = 0.0;
    double model_norm = 0.0;
    double soft_norm = 0.0;
    // Onsager coefficient used to produce this iterate (0 for the first step).
    double onsager = 0.0;
    // eta handed to the aggregator that produced this iterate (NaN when not applicable).
    double eta_used = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    bool diverged = false;
    int diverged_at = -1;
    std::string message;
};

}  // namespace amprt
