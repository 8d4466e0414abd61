#include "czp/czp_model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace czp {

using json = nlohmann::ordered_json;

namespace {

void validate_model(const CZPModel& model) {
    require(model.zeros.size() == model.poles.size(), Errc::invalid_argument,
            "CZPModel: zero and pole counts must match");
    for (const cplx& p : model.poles) {
        if (std::abs(p.imag()) < model.eps_pole) {
            std::ostringstream msg;
            msg << "CZPModel: pole " << p << " within " << model.eps_pole
                << " of the real frequency axis";
            fail(Errc::singular_pole, msg.str());
        }
    }
}

std::vector<int> sorted_order(const std::vector<cplx>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (v[static_cast<size_t>(a)].real() != v[static_cast<size_t>(b)].real())
            return v[static_cast<size_t>(a)].real() < v[static_cast<size_t>(b)].real();
        return v[static_cast<size_t>(a)].imag() < v[static_cast<size_t>(b)].imag();
    });
    return idx;
}

inline double half_log_dist2(double w, const cplx& root) {
    const double dr = w - root.real();
    const double di = root.imag();
    return 0.5 * std::log(std::max(dr * dr + di * di, 1e-300));
}

}  // namespace

FrequencyResponse eval_log_s11(const CZPModel& model, const FrequencyGrid& grid) {
    validate_model(model);
    const std::vector<int> zo = sorted_order(model.zeros);
    const std::vector<int> po = sorted_order(model.poles);

    FrequencyResponse resp;
    resp.grid = grid;
    resp.log_mag.resize(grid.count());
    for (int m = 0; m < grid.count(); ++m) {
        const double w = grid.values[m];
        double acc = 0.0;
        for (int k : zo) acc += half_log_dist2(w, model.zeros[static_cast<size_t>(k)]);
        for (int k : po) acc -= half_log_dist2(w, model.poles[static_cast<size_t>(k)]);
        resp.log_mag[m] = model.log_c0 + acc;
    }
    return resp;
}

cplx eval_rational(const RationalFunction& rf, double omega, double eps) {
    for (const cplx& p : rf.poles) {
        if (std::abs(cplx(omega, 0.0) - p) < eps) {
            std::ostringstream msg;
            msg << "eval_rational: omega = " << omega << " within " << eps << " of pole " << p;
            fail(Errc::singular_pole, msg.str());
        }
    }
    return eval_rational_at(rf, cplx(omega, 0.0));
}

S11Result s11_from_impedance(const ComplexSpectrum& z_in, double z0) {
    require(z0 > 0.0, Errc::invalid_argument, "s11_from_impedance: z0 must be > 0");
    S11Result out;
    out.s11.grid = z_in.grid;
    out.s11.values.resize(z_in.values.size());
    out.response.grid = z_in.grid;
    out.response.log_mag.resize(z_in.values.size());
    for (int m = 0; m < z_in.values.size(); ++m) {
        const cplx zn = z_in.values[m] / z0;
        const cplx den = zn + 1.0;
        if (std::abs(den) < 1e-12) {
            std::ostringstream msg;
            msg << "s11_from_impedance: Z_in/Z0 + 1 underflow at frequency "
                << z_in.grid.values[m];
            fail(Errc::degenerate_impedance, msg.str());
        }
        const cplx s = (zn - 1.0) / den;
        out.s11.values[m] = s;
        const double mag = std::abs(s);
        out.response.log_mag[m] = std::max(mag > 0.0 ? std::log(mag) : kLogMagFloor, kLogMagFloor);
    }
    return out;
}

double mse_loss(const FrequencyResponse& pred, const FrequencyResponse& target) {
    require(same_grid(pred.grid, target.grid), Errc::invalid_argument, "mse_loss: grid mismatch");
    return (pred.log_mag - target.log_mag).squaredNorm() / pred.log_mag.size();
}

double shrinkage_loss(const FrequencyResponse& pred, const FrequencyResponse& target, double a,
                      double c) {
    require(same_grid(pred.grid, target.grid), Errc::invalid_argument,
            "shrinkage_loss: grid mismatch");
    require(a > 0.0, Errc::invalid_argument, "shrinkage_loss: a must be > 0");
    double acc = 0.0;
    for (int i = 0; i < pred.log_mag.size(); ++i) {
        const double l = std::abs(pred.log_mag[i] - target.log_mag[i]);
        acc += l * l / (1.0 + std::exp(a * (c - l)));
    }
    return acc / pred.log_mag.size();
}

// ---------------------------------------------------------------------------
// Matching

// Jonker-Volgenant style shortest augmenting path assignment, O(n^3).
double min_cost_matching(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    require(a.size() == b.size(), Errc::invalid_argument, "min_cost_matching: unequal set sizes");
    const int n = static_cast<int>(a.size());
    if (n == 0) return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> cost(static_cast<size_t>(n),
                                          std::vector<double>(static_cast<size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cost[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                std::abs(a[static_cast<size_t>(i)] - b[static_cast<size_t>(j)]);

    std::vector<double> u(static_cast<size_t>(n + 1)), v(static_cast<size_t>(n + 1));
    std::vector<int> match(static_cast<size_t>(n + 1), 0);  // column -> row, 1-based
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n + 1), inf);
        std::vector<char> used(static_cast<size_t>(n + 1), false);
        std::vector<int> way(static_cast<size_t>(n + 1), 0);
        do {
            used[static_cast<size_t>(j0)] = true;
            const int i0 = match[static_cast<size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost[static_cast<size_t>(i0 - 1)][static_cast<size_t>(j - 1)] -
                                   u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        total += cost[static_cast<size_t>(match[static_cast<size_t>(j)] - 1)]
                     [static_cast<size_t>(j - 1)];
    return total;
}

double match_zero_pole_sets(const CZPModel& m1, const CZPModel& m2) {
    require(m1.degree() == m2.degree(), Errc::invalid_argument,
            "match_zero_pole_sets: unequal degrees");
    return min_cost_matching(m1.zeros, m2.zeros) + min_cost_matching(m1.poles, m2.poles);
}

// ---------------------------------------------------------------------------
// Smoothness bound

namespace {

double point_segment_distance(const cplx& z, double w0, double w1) {
    const double x = std::clamp(z.real(), w0, w1);
    const double dr = z.real() - x;
    return std::sqrt(dr * dr + z.imag() * z.imag());
}

}  // namespace

Eigen::VectorXd first_difference_bound(const CZPModel& model, const FrequencyGrid& grid) {
    const int m = grid.count();
    Eigen::VectorXd bound(std::max(m - 1, 0));
    double min_im_pole = std::numeric_limits<double>::infinity();
    for (const cplx& p : model.poles) min_im_pole = std::min(min_im_pole, std::abs(p.imag()));
    for (int j = 0; j + 1 < m; ++j) {
        const double w0 = grid.values[j], w1 = grid.values[j + 1];
        double d_z = std::numeric_limits<double>::infinity();
        for (const cplx& z : model.zeros) d_z = std::min(d_z, point_segment_distance(z, w0, w1));
        const double k = model.degree();
        bound[j] = k * (w1 - w0) * (1.0 / min_im_pole + 1.0 / d_z);
        if (model.degree() == 0) bound[j] = 0.0;
    }
    return bound;
}

bool satisfies_smoothness_bound(const CZPModel& model, const FrequencyGrid& grid,
                                const Eigen::VectorXd& log_mag) {
    require(log_mag.size() == grid.count(), Errc::invalid_argument,
            "satisfies_smoothness_bound: size mismatch");
    const Eigen::VectorXd bound = first_difference_bound(model, grid);
    for (int j = 0; j + 1 < grid.count(); ++j) {
        if (std::abs(log_mag[j + 1] - log_mag[j]) > bound[j] + 1e-12) return false;
    }
    return true;
}

Eigen::VectorXd to_db(const Eigen::VectorXd& log_mag) {
    return log_mag * (20.0 / std::log(10.0));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json roots_to_json(const std::vector<cplx>& v) {
    json arr = json::array();
    for (const cplx& z : v) arr.push_back({z.real(), z.imag()});
    return arr;
}

std::vector<cplx> roots_from_json(const json& arr) {
    std::vector<cplx> v;
    for (const auto& e : arr) v.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
    return v;
}

}  // namespace

std::string czp_model_to_json(const CZPModel& model) {
    json j;
    j["version"] = 1;
    j["K"] = model.degree();
    j["log_c0"] = model.log_c0;
    j["zeros"] = roots_to_json(model.zeros);
    j["poles"] = roots_to_json(model.poles);
    j["eps_pole"] = model.eps_pole;
    j["unit"] = model.unit == FrequencyUnit::gigahertz ? "GHz" : "dimensionless";
    return j.dump(2) + "\n";
}

CZPModel czp_model_from_json(const std::string& text) {
    json j = json::parse(text);
    CZPModel m;
    m.log_c0 = j.at("log_c0").get<double>();
    m.zeros = roots_from_json(j.at("zeros"));
    m.poles = roots_from_json(j.at("poles"));
    if (j.contains("eps_pole")) m.eps_pole = j.at("eps_pole").get<double>();
    m.unit = j.at("unit").get<std::string>() == "GHz" ? FrequencyUnit::gigahertz
                                                      : FrequencyUnit::dimensionless;
    require(static_cast<int>(m.zeros.size()) == j.at("K").get<int>(), Errc::io,
            "czp_model_from_json: K mismatch");
    return m;
}

std::string response_to_csv(const FrequencyResponse& response) {
    std::string out = "# unit ";
    out += response.grid.unit == FrequencyUnit::gigahertz ? "GHz" : "dimensionless";
    out += "\nomega,log_mag\n";
    char line[80];
    for (int i = 0; i < response.grid.count(); ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", response.grid.values[i],
                      response.log_mag[i]);
        out += line;
    }
    return out;
}

FrequencyResponse response_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    FrequencyUnit unit = FrequencyUnit::dimensionless;
    std::vector<double> omega, mag;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find("GHz") != std::string::npos) unit = FrequencyUnit::gigahertz;
            continue;
        }
        if (line.rfind("omega", 0) == 0) continue;
        double w = 0.0, v = 0.0;
        if (std::sscanf(line.c_str(), "%lg,%lg", &w, &v) != 2)
            fail(Errc::io, "response_from_csv: bad line: " + line);
        omega.push_back(w);
        mag.push_back(v);
    }
    FrequencyResponse resp;
    resp.grid = make_grid(std::move(omega), unit);
    resp.log_mag = Eigen::Map<Eigen::VectorXd>(mag.data(), static_cast<int>(mag.size()));
    return resp;
}

}  // namespace czp
