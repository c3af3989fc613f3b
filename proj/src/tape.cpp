#include "ticketlab/tape.hpp"

#include <cmath>

namespace ticketlab {

Var Tape::input(double t) {
    Node n;
    n.value = t;
    n.tangent = 1.0;
    return push(n);
}

Var Tape::param(double w) {
    Node n;
    n.value = w;
    Var v = push(n);
    params_.push_back(v.idx);
    return v;
}

Var Tape::constant(double c) {
    Node n;
    n.value = c;
    return push(n);
}

void Tape::clear() {
    nodes_.clear();
    params_.clear();
}

void Tape::check_same(Var a, Var b) {
    if (a.tape == nullptr || a.tape != b.tape)
        throw TapeError("operands live on different tapes");
}

std::vector<double> Tape::reverse(Var loss) const {
    node(loss);  // validates ownership and range
    std::vector<double> vbar(nodes_.size(), 0.0);
    std::vector<double> dbar(nodes_.size(), 0.0);
    vbar[static_cast<std::size_t>(loss.idx)] = 1.0;

    for (std::size_t i = nodes_.size(); i-- > 0;) {
        const Node& n = nodes_[i];
        const double vb = vbar[i];
        const double db = dbar[i];
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::tangent_extract:
                // value = parent.tangent, so the value adjoint feeds the
                // parent's tangent adjoint.
                dbar[static_cast<std::size_t>(n.p0)] += vb;
                break;
            case Op::binary:
                vbar[static_cast<std::size_t>(n.p1)] += vb * n.d1 + db * n.t1;
                dbar[static_cast<std::size_t>(n.p1)] += db * n.d1;
                [[fallthrough]];
            case Op::unary:
                vbar[static_cast<std::size_t>(n.p0)] += vb * n.d0 + db * n.t0;
                dbar[static_cast<std::size_t>(n.p0)] += db * n.d0;
                break;
        }
    }

    std::vector<double> grad(params_.size());
    for (std::size_t k = 0; k < params_.size(); ++k)
        grad[k] = vbar[static_cast<std::size_t>(params_[k])];
    return grad;
}

namespace {

double ipow(double x, int k) {
    if (k < 0) {
        if (x == 0.0) throw TapeError("pow_int: zero base with negative exponent");
        return 1.0 / ipow(x, -k);
    }
    double r = 1.0;
    while (k > 0) {
        if (k & 1) r *= x;
        x *= x;
        k >>= 1;
    }
    return r;
}

}  // namespace

Var operator+(Var a, Var b) {
    Tape::check_same(a, b);
    Tape& t = *a.tape;
    Tape::Node n;
    n.op = Tape::Op::binary;
    n.p0 = a.idx;
    n.p1 = b.idx;
    n.value = t.value(a) + t.value(b);
    n.tangent = t.tangent(a) + t.tangent(b);
    n.d0 = 1.0;
    n.d1 = 1.0;
    return t.push(n);
}

Var operator-(Var a, Var b) {
    Tape::check_same(a, b);
    Tape& t = *a.tape;
    Tape::Node n;
    n.op = Tape::Op::binary;
    n.p0 = a.idx;
    n.p1 = b.idx;
    n.value = t.value(a) - t.value(b);
    n.tangent = t.tangent(a) - t.tangent(b);
    n.d0 = 1.0;
    n.d1 = -1.0;
    return t.push(n);
}

Var operator*(Var a, Var b) {
    Tape::check_same(a, b);
    Tape& t = *a.tape;
    const double av = t.value(a), bv = t.value(b);
    const double ad = t.tangent(a), bd = t.tangent(b);
    Tape::Node n;
    n.op = Tape::Op::binary;
    n.p0 = a.idx;
    n.p1 = b.idx;
    n.value = av * bv;
    n.tangent = ad * bv + av * bd;
    n.d0 = bv;
    n.d1 = av;
    n.t0 = bd;
    n.t1 = ad;
    return t.push(n);
}

Var operator/(Var a, Var b) {
    Tape::check_same(a, b);
    Tape& t = *a.tape;
    const double av = t.value(a), bv = t.value(b);
    const double ad = t.tangent(a), bd = t.tangent(b);
    if (bv == 0.0) throw TapeError("division by zero value");
    const double inv = 1.0 / bv;
    const double inv2 = inv * inv;
    Tape::Node n;
    n.op = Tape::Op::binary;
    n.p0 = a.idx;
    n.p1 = b.idx;
    n.value = av * inv;
    n.tangent = (ad * bv - av * bd) * inv2;
    n.d0 = inv;
    n.d1 = -av * inv2;
    n.t0 = -bd * inv2;
    n.t1 = -ad * inv2 + 2.0 * av * bd * inv2 * inv;
    return t.push(n);
}

Var operator-(Var a) { return a.tape->constant(0.0) - a; }

Var sin(Var a) {
    Tape& t = *a.tape;
    const double av = t.value(a), ad = t.tangent(a);
    const double s = std::sin(av), c = std::cos(av);
    Tape::Node n;
    n.op = Tape::Op::unary;
    n.p0 = a.idx;
    n.value = s;
    n.tangent = c * ad;
    n.d0 = c;
    n.t0 = -s * ad;
    return t.push(n);
}

Var cos(Var a) {
    Tape& t = *a.tape;
    const double av = t.value(a), ad = t.tangent(a);
    const double s = std::sin(av), c = std::cos(av);
    Tape::Node n;
    n.op = Tape::Op::unary;
    n.p0 = a.idx;
    n.value = c;
    n.tangent = -s * ad;
    n.d0 = -s;
    n.t0 = -c * ad;
    return t.push(n);
}

Var exp(Var a) {
    Tape& t = *a.tape;
    const double av = t.value(a), ad = t.tangent(a);
    const double e = std::exp(av);
    Tape::Node n;
    n.op = Tape::Op::unary;
    n.p0 = a.idx;
    n.value = e;
    n.tangent = e * ad;
    n.d0 = e;
    n.t0 = e * ad;
    return t.push(n);
}

Var pow_int(Var a, int k) {
    Tape& t = *a.tape;
    const double av = t.value(a), ad = t.tangent(a);
    Tape::Node n;
    n.op = Tape::Op::unary;
    n.p0 = a.idx;
    n.value = ipow(av, k);
    if (k == 0) {
        n.tangent = 0.0;
    } else if (k == 1) {
        n.tangent = ad;
        n.d0 = 1.0;
    } else {
        const double pk1 = ipow(av, k - 1);
        n.d0 = k * pk1;
        n.tangent = n.d0 * ad;
        // k(k-1) x^(k-2); at k in {0,1} the coefficient vanishes, handled above
        n.t0 = static_cast<double>(k) * (k - 1) * ipow(av, k - 2) * ad;
    }
    return t.push(n);
}

Var tangent_of(Var a) {
    Tape& t = *a.tape;
    Tape::Node n;
    n.op = Tape::Op::tangent_extract;
    n.p0 = a.idx;
    n.value = t.tangent(a);
    n.tangent = 0.0;
    return t.push(n);
}

std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> params, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite difference step must be > 0");
    std::vector<double> w(params.begin(), params.end());
    std::vector<double> grad(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double orig = w[i];
        w[i] = orig + step;
        const double up = loss_fn(w);
        w[i] = orig - step;
        const double down = loss_fn(w);
        w[i] = orig;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

}  // namespace ticketlab
