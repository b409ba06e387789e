#include "ahsse/observables.hpp"

#include <cmath>
#include <fstream>

namespace ahsse {

double transition_rate(const SpinorState& state, const SpatialGrid& grid) {
    const double n0 = component_norm_sq(state.psi0, grid);
    const double n1 = component_norm_sq(state.psi1, grid);
    if (n0 + n1 <= 0.0) throw NumericalBlowup("transition_rate: zero total norm", -1);
    return n0 / (n0 + n1);
}

double mean_position(const SpinorState& state, const SpatialGrid& grid) {
    const double total = total_norm_sq(state, grid);
    if (total <= 0.0) throw NumericalBlowup("mean_position: zero total norm", -1);
    const Eigen::ArrayXd density =
        state.psi0.array().abs2() + state.psi1.array().abs2();
    return (grid.points.array() * density).sum() * grid.dx() / total;
}

ObservableSample sample_observables(const SpinorState& state, const SpatialGrid& grid,
                                    long trajectory_id) {
    ObservableSample s;
    s.time = state.time;
    s.norm0 = component_norm_sq(state.psi0, grid);
    s.norm1 = component_norm_sq(state.psi1, grid);
    const double total = s.norm0 + s.norm1;
    if (total <= 0.0 || !std::isfinite(total))
        throw NumericalBlowup("sample_observables: invalid total norm", -1);
    s.r = s.norm0 / total;
    const Eigen::ArrayXd density = state.psi0.array().abs2() + state.psi1.array().abs2();
    s.x_mean = (grid.points.array() * density).sum() * grid.dx() / total;
    s.trajectory_id = trajectory_id;
    return s;
}

HistogramSummary histogram(const std::vector<double>& samples, int n_bins, double lo, double hi) {
    if (samples.empty()) throw ConfigError("histogram: empty sample list");
    if (n_bins < 1) throw ConfigError("histogram: n_bins must be >= 1");
    if (!(lo < hi)) throw ConfigError("histogram: lo must be < hi");

    HistogramSummary h;
    h.n = static_cast<long>(samples.size());
    h.bin_edges.resize(n_bins + 1);
    const double width = (hi - lo) / n_bins;
    for (int i = 0; i <= n_bins; ++i) h.bin_edges[i] = lo + i * width;
    h.counts = Eigen::VectorXi::Zero(n_bins);

    double mean = 0.0, m2 = 0.0;
    long count = 0;
    for (double s : samples) {
        ++count;
        const double delta = s - mean;
        mean += delta / count;
        m2 += delta * (s - mean);
        if (s < lo) {
            ++h.underflow;
        } else if (s >= hi) {
            ++h.overflow;
        } else {
            int bin = static_cast<int>((s - lo) / width);
            if (bin >= n_bins) bin = n_bins - 1;  // rounding at the top edge
            ++h.counts[bin];
        }
    }
    h.mean = mean;
    h.variance = (count > 1) ? m2 / (count - 1) : 0.0;
    return h;
}

void write_histogram_csv(const HistogramSummary& hist, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "bin_left,bin_right,count\n";
    for (int i = 0; i < hist.counts.size(); ++i)
        out << hist.bin_edges[i] << ',' << hist.bin_edges[i + 1] << ',' << hist.counts[i] << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace ahsse
