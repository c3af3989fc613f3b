#include "ticketlab/systems.hpp"

#include <stdexcept>

namespace ticketlab {

void SystemSpec::rhs(std::span<const double> s, std::span<double> out) const {
    if (s.size() != static_cast<std::size_t>(dim) || out.size() != s.size())
        throw ShapeError("rhs: state dimension mismatch");
    switch (id) {
        case SystemId::nlo: {
            const double x = s[0], p = s[1];
            out[0] = p;
            out[1] = -(x + x * x * x);
            break;
        }
        case SystemId::hh: {
            const double x = s[0], y = s[1], px = s[2], py = s[3];
            out[0] = px;
            out[1] = py;
            out[2] = -(x + 2.0 * x * y);
            out[3] = -(y + x * x - y * y);
            break;
        }
    }
}

void SystemSpec::rhs_jacobian(std::span<const double> s, std::span<double> out) const {
    const std::size_t d = static_cast<std::size_t>(dim);
    if (s.size() != d || out.size() != d * d)
        throw ShapeError("rhs_jacobian: dimension mismatch");
    for (double& v : out) v = 0.0;
    switch (id) {
        case SystemId::nlo: {
            const double x = s[0];
            out[0 * d + 1] = 1.0;
            out[1 * d + 0] = -(1.0 + 3.0 * x * x);
            break;
        }
        case SystemId::hh: {
            const double x = s[0], y = s[1];
            out[0 * d + 2] = 1.0;
            out[1 * d + 3] = 1.0;
            out[2 * d + 0] = -(1.0 + 2.0 * y);
            out[2 * d + 1] = -2.0 * x;
            out[3 * d + 0] = -2.0 * x;
            out[3 * d + 1] = -(1.0 - 2.0 * y);
            break;
        }
    }
}

double SystemSpec::energy(std::span<const double> s) const {
    if (s.size() != static_cast<std::size_t>(dim))
        throw ShapeError("energy: state dimension mismatch");
    switch (id) {
        case SystemId::nlo: {
            const double x = s[0], p = s[1];
            return 0.5 * p * p + 0.5 * x * x + 0.25 * x * x * x * x;
        }
        case SystemId::hh: {
            const double x = s[0], y = s[1], px = s[2], py = s[3];
            return 0.5 * (px * px + py * py) + 0.5 * (x * x + y * y) + x * x * y -
                   y * y * y / 3.0;
        }
    }
    throw std::logic_error("unreachable");
}

std::vector<Var> SystemSpec::residuals(Tape& tape, std::span<const Var> xhat) const {
    if (xhat.size() != static_cast<std::size_t>(dim))
        throw ShapeError("residuals: state dimension mismatch");
    (void)tape;
    std::vector<Var> r;
    switch (id) {
        case SystemId::nlo: {
            Var x = xhat[0], p = xhat[1];
            r.push_back(tangent_of(x) - p);
            r.push_back(tangent_of(p) + x + pow_int(x, 3));
            break;
        }
        case SystemId::hh: {
            Var x = xhat[0], y = xhat[1], px = xhat[2], py = xhat[3];
            r.push_back(tangent_of(x) - px);
            r.push_back(tangent_of(y) - py);
            r.push_back(tangent_of(px) + x + 2.0 * (x * y));
            r.push_back(tangent_of(py) + y + pow_int(x, 2) - pow_int(y, 2));
            break;
        }
    }
    return r;
}

SystemSpec make_nlo(std::vector<double> initial_state) {
    SystemSpec s;
    s.id = SystemId::nlo;
    s.name = "nlo";
    s.dim = 2;
    if (initial_state.size() != 2) throw ShapeError("nlo initial state must have 2 components");
    s.initial_state = std::move(initial_state);
    return s;
}

SystemSpec make_hh(std::vector<double> initial_state) {
    SystemSpec s;
    s.id = SystemId::hh;
    s.name = "hh";
    s.dim = 4;
    if (initial_state.size() != 4) throw ShapeError("hh initial state must have 4 components");
    s.initial_state = std::move(initial_state);
    return s;
}

SystemSpec make_system(SystemId id) {
    return id == SystemId::nlo ? make_nlo() : make_hh();
}

SystemSpec make_system_named(const std::string& name) {
    if (name == "nlo") return make_nlo();
    if (name == "hh") return make_hh();
    throw std::invalid_argument("unknown system: " + name);
}

}  // namespace ticketlab
