#include "pai/poly.hpp"

#include <array>
#include <sstream>

namespace pai {

namespace {
constexpr int kMaxDegree = 64;

// Powers z^0..z^n into out (n <= kMaxDegree).
void fill_powers(Complex z, int n, std::array<Complex, kMaxDegree + 1>& out) {
    out[0] = Complex(1.0, 0.0);
    for (int i = 1; i <= n; ++i) out[i] = out[i - 1] * z;
}
}  // namespace

BivariatePoly::BivariatePoly(CoeffMap coeffs) : coeffs_(std::move(coeffs)) { prune(); }

BivariatePoly BivariatePoly::constant(double c) {
    BivariatePoly p;
    p.add_term(0, 0, c);
    return p;
}

BivariatePoly BivariatePoly::monomial(int dx, int dy, double c) {
    BivariatePoly p;
    p.add_term(dx, dy, c);
    return p;
}

void BivariatePoly::prune() {
    for (auto it = coeffs_.begin(); it != coeffs_.end();) {
        if (it->second == 0.0)
            it = coeffs_.erase(it);
        else
            ++it;
    }
    ensure_flat();
}

// Kept eagerly in sync by every mutator so that concurrent const evaluation
// never rebuilds shared state.
void BivariatePoly::ensure_flat() const {
    flat_.clear();
    flat_.reserve(coeffs_.size());
    max_dx_ = max_dy_ = 0;
    for (const auto& [k, c] : coeffs_) {
        flat_.push_back({k.first, k.second, c});
        max_dx_ = std::max(max_dx_, k.first);
        max_dy_ = std::max(max_dy_, k.second);
    }
    flat_ok_ = true;
}

int BivariatePoly::degree() const {
    int d = -1;
    for (const auto& [k, c] : coeffs_) d = std::max(d, k.first + k.second);
    return d;
}

double BivariatePoly::coeff(int dx, int dy) const {
    auto it = coeffs_.find({dx, dy});
    return it == coeffs_.end() ? 0.0 : it->second;
}

void BivariatePoly::add_term(int dx, int dy, double c) {
    if (dx < 0 || dy < 0) throw std::invalid_argument("BivariatePoly: negative exponent");
    if (dx > kMaxDegree || dy > kMaxDegree)
        throw std::invalid_argument("BivariatePoly: degree too large");
    auto [it, inserted] = coeffs_.try_emplace({dx, dy}, c);
    if (!inserted) it->second += c;
    if (it->second == 0.0) coeffs_.erase(it);
    ensure_flat();
}

Complex BivariatePoly::eval(const C2& z) const {
    if (coeffs_.empty()) return {0.0, 0.0};
    std::array<Complex, kMaxDegree + 1> px, py;
    fill_powers(z.x, max_dx_, px);
    fill_powers(z.y, max_dy_, py);
    Complex s{0.0, 0.0};
    for (const auto& t : flat_) s += t.c * px[t.jx] * py[t.jy];
    return s;
}

double BivariatePoly::eval_real(double x, double y) const {
    return eval(C2(x, y)).real();
}

C2 BivariatePoly::grad(const C2& z) const {
    if (coeffs_.empty()) return {};
    std::array<Complex, kMaxDegree + 1> px, py;
    fill_powers(z.x, max_dx_, px);
    fill_powers(z.y, max_dy_, py);
    Complex gx{0.0, 0.0}, gy{0.0, 0.0};
    for (const auto& t : flat_) {
        if (t.jx > 0) gx += t.c * double(t.jx) * px[t.jx - 1] * py[t.jy];
        if (t.jy > 0) gy += t.c * double(t.jy) * px[t.jx] * py[t.jy - 1];
    }
    return {gx, gy};
}

void BivariatePoly::eval_grad(const C2& z, Complex& value, C2& grad) const {
    value = {0.0, 0.0};
    grad = {};
    if (coeffs_.empty()) return;
    std::array<Complex, kMaxDegree + 1> px, py;
    fill_powers(z.x, max_dx_, px);
    fill_powers(z.y, max_dy_, py);
    Complex gx{0.0, 0.0}, gy{0.0, 0.0};
    for (const auto& t : flat_) {
        Complex base = px[t.jx] * py[t.jy];
        value += t.c * base;
        if (t.jx > 0) gx += t.c * double(t.jx) * px[t.jx - 1] * py[t.jy];
        if (t.jy > 0) gy += t.c * double(t.jy) * px[t.jx] * py[t.jy - 1];
    }
    grad = {gx, gy};
}

BivariatePoly BivariatePoly::dx() const {
    BivariatePoly r;
    for (const auto& [k, c] : coeffs_)
        if (k.first > 0) r.add_term(k.first - 1, k.second, c * k.first);
    return r;
}

BivariatePoly BivariatePoly::dy() const {
    BivariatePoly r;
    for (const auto& [k, c] : coeffs_)
        if (k.second > 0) r.add_term(k.first, k.second - 1, c * k.second);
    return r;
}

void BivariatePoly::hessian(const C2& z, Complex& hxx, Complex& hxy, Complex& hyy) const {
    hxx = dx().dx().eval(z);
    hxy = dx().dy().eval(z);
    hyy = dy().dy().eval(z);
}

BivariatePoly BivariatePoly::operator+(const BivariatePoly& o) const {
    BivariatePoly r = *this;
    for (const auto& [k, c] : o.coeffs_) r.add_term(k.first, k.second, c);
    return r;
}

BivariatePoly BivariatePoly::operator-(const BivariatePoly& o) const {
    BivariatePoly r = *this;
    for (const auto& [k, c] : o.coeffs_) r.add_term(k.first, k.second, -c);
    return r;
}

BivariatePoly BivariatePoly::operator*(const BivariatePoly& o) const {
    BivariatePoly r;
    for (const auto& [ka, ca] : coeffs_)
        for (const auto& [kb, cb] : o.coeffs_)
            r.add_term(ka.first + kb.first, ka.second + kb.second, ca * cb);
    return r;
}

BivariatePoly BivariatePoly::operator*(double s) const {
    BivariatePoly r;
    if (s == 0.0) return r;
    for (const auto& [k, c] : coeffs_) r.coeffs_[k] = c * s;
    r.ensure_flat();
    return r;
}

std::vector<std::array<double, 3>> BivariatePoly::to_triples() const {
    std::vector<std::array<double, 3>> out;
    out.reserve(coeffs_.size());
    for (const auto& [k, c] : coeffs_)
        out.push_back({double(k.first), double(k.second), c});
    return out;
}

BivariatePoly BivariatePoly::from_triples(const std::vector<std::array<double, 3>>& t) {
    BivariatePoly p;
    for (const auto& a : t) p.add_term(int(a[0]), int(a[1]), a[2]);
    return p;
}

std::string BivariatePoly::to_string() const {
    if (coeffs_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, c] : coeffs_) {
        if (!first) os << " + ";
        os << c;
        if (k.first > 0) os << "*x^" << k.first;
        if (k.second > 0) os << "*y^" << k.second;
        first = false;
    }
    return os.str();
}

}  // namespace pai
