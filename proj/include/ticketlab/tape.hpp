#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ticketlab {

struct TapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid until the tape is cleared.
struct Var {
    Tape* tape = nullptr;
    int32_t idx = -1;
};

/// Scalar computation tape carrying a value channel and a single forward
/// tangent channel (d/dt of the value, seeded by input()). reverse() walks
/// the tape once and yields d(loss)/d(param) for every registered parameter,
/// including the influence a parameter has on downstream tangents.
///
/// Nodes are immutable once created and the graph is append-only, so parent
/// indices always precede children and the reverse sweep is a single
/// back-to-front pass.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// The differentiation variable: value t, tangent 1.
    Var input(double t);
    /// A trainable parameter: tangent 0, registered as a gradient target.
    Var param(double w);
    /// A constant: tangent 0, not a gradient target.
    Var constant(double c);

    double value(Var v) const { return node(v).value; }
    double tangent(Var v) const { return node(v).tangent; }

    std::size_t size() const { return nodes_.size(); }
    std::size_t param_count() const { return params_.size(); }

    /// Drops all nodes and registered parameters; handles become invalid.
    void clear();

    /// Reverse sweep from `loss`. Returns one adjoint per registered
    /// parameter, in registration order.
    std::vector<double> reverse(Var loss) const;

    friend Var operator+(Var a, Var b);
    friend Var operator-(Var a, Var b);
    friend Var operator*(Var a, Var b);
    friend Var operator/(Var a, Var b);
    friend Var operator-(Var a);
    friend Var sin(Var a);
    friend Var cos(Var a);
    friend Var exp(Var a);
    friend Var pow_int(Var a, int k);
    friend Var tangent_of(Var a);

private:
    enum class Op : uint8_t { leaf, unary, binary, tangent_extract };

    struct Node {
        double value = 0.0;
        double tangent = 0.0;
        // d*: d(value)/d(parent value); t*: d(tangent)/d(parent value).
        // d(tangent)/d(parent tangent) always equals d* for chain-rule ops.
        double d0 = 0.0, d1 = 0.0;
        double t0 = 0.0, t1 = 0.0;
        int32_t p0 = -1, p1 = -1;
        Op op = Op::leaf;
    };

    const Node& node(Var v) const {
        if (v.tape != this || v.idx < 0 || static_cast<std::size_t>(v.idx) >= nodes_.size())
            throw TapeError("variable does not belong to this tape");
        return nodes_[static_cast<std::size_t>(v.idx)];
    }

    Var push(Node n) {
        nodes_.push_back(n);
        return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
    }

    static void check_same(Var a, Var b);

    std::vector<Node> nodes_;
    std::vector<int32_t> params_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var sin(Var a);
Var cos(Var a);
Var exp(Var a);
/// Integer power by repeated multiplication of the value channel.
Var pow_int(Var a, int k);
/// Value = forward tangent of `a`. This is how time derivatives enter a
/// residual; the extracted node's own tangent channel is zero.
Var tangent_of(Var a);

inline Var operator+(Var a, double c) { return a + a.tape->constant(c); }
inline Var operator+(double c, Var a) { return a.tape->constant(c) + a; }
inline Var operator-(Var a, double c) { return a - a.tape->constant(c); }
inline Var operator-(double c, Var a) { return a.tape->constant(c) - a; }
inline Var operator*(Var a, double c) { return a * a.tape->constant(c); }
inline Var operator*(double c, Var a) { return a.tape->constant(c) * a; }
inline Var operator/(Var a, double c) { return a / a.tape->constant(c); }
inline Var operator/(double c, Var a) { return a.tape->constant(c) / a; }

/// Central-difference gradient (L(w+h) - L(w-h)) / 2h, one entry per
/// parameter. The verification oracle for reverse().
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> params, double step);

}  // namespace ticketlab
