#include "ncfem/field.hpp"

#include "ncfem/bernstein.hpp"

#include <cstdio>
#include <ostream>

namespace ncfem {

Field::Field(BrokenLayout layout, Vec coefficients) : layout_(std::move(layout)), coefficients_(std::move(coefficients)) {
    if (coefficients_.size() != layout_.size()) throw Error("Field: coefficient count does not match the layout");
}

double Field::value(Index cell, const Bary& lambda) const { return value_row(layout_, cell, lambda).dot(block(cell)); }

Point Field::gradient(Index cell, const Bary& lambda) const { return gradient_rows(layout_, cell, lambda) * block(cell); }

SmallMat Field::hessian(Index cell, const Bary& lambda) const {
    const int d = layout_.dim();
    const Vec h = hessian_rows(layout_, cell, lambda) * block(cell);
    SmallMat H(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) H(i, j) = h(i * d + j);
    return H;
}

double Field::value_in(Index element, const Point& x) const {
    auto [c, mu] = layout_.locate(element, layout_.mesh().barycentric(element, x));
    return value(c, mu);
}

Point Field::gradient_in(Index element, const Point& x) const {
    auto [c, mu] = layout_.locate(element, layout_.mesh().barycentric(element, x));
    return gradient(c, mu);
}

SmallMat Field::hessian_in(Index element, const Point& x) const {
    auto [c, mu] = layout_.locate(element, layout_.mesh().barycentric(element, x));
    return hessian(c, mu);
}

std::optional<Index> find_element(const Mesh& mesh, const Point& x) {
    for (Index k = 0; k < mesh.num_elements(); ++k)
        if (mesh.barycentric(k, x).minCoeff() >= -1e-12) return k;
    return std::nullopt;
}

void write_samples_csv(std::ostream& out, const Field& field, int per_edge, bool hessian) {
    const Mesh& mesh = field.layout().mesh();
    if (mesh.dim() != 2) throw ConfigError("sample output supports d = 2 only");
    out << "element,x,y,value,grad_x,grad_y";
    if (hessian) out << ",h_xx,h_xy,h_yy";
    out << '\n';
    const auto& nodes = multi_indices(3, per_edge);
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.12g", v);
        out << buf;
    };
    for (Index k = 0; k < mesh.num_elements(); ++k)
        for (const auto& a : nodes) {
            Bary lambda(3);
            for (int z = 0; z < 3; ++z) lambda(z) = double(a[static_cast<std::size_t>(z)]) / per_edge;
            // nudge inside so that the owning cell is unambiguous
            lambda = 0.999999 * lambda + Bary::Constant(3, 1e-6 / 3.0);
            const Point x = mesh.point(k, lambda);
            auto [c, mu] = field.layout().locate(k, lambda);
            out << k;
            put(x(0));
            put(x(1));
            put(field.value(c, mu));
            const Point g = field.gradient(c, mu);
            put(g(0));
            put(g(1));
            if (hessian) {
                const SmallMat H = field.hessian(c, mu);
                put(H(0, 0));
                put(H(0, 1));
                put(H(1, 1));
            }
            out << '\n';
        }
}

namespace {

template <typename Integrand>
double face_integral(const Field& field, Index face, int q_degree, int rule_degree, int field_degree_loss,
                     const char* what, Integrand&& integrand) {
    const BrokenLayout& layout = field.layout();
    const Mesh& mesh = layout.mesh();
    const int needed = layout.degree() - field_degree_loss + q_degree;
    const auto& rule = simplex_rule(mesh.dim() - 1, rule_degree);
    require_exactness(rule, needed, what);
    const Face& f = mesh.face(face);
    double sum = 0.0;
    for (int side = 0; side < (f.boundary() ? 1 : 2); ++side) {
        const FaceSide s = face_side(layout, face, side);
        const double sign = side == 0 ? 1.0 : -1.0;
        for (Index i = 0; i < rule.size(); ++i) {
            const Bary lambda = face_to_cell(s, rule.points.col(i), layout.nvars());
            Point x = Point::Zero(mesh.dim());
            for (std::size_t v = 0; v < f.vertices.size(); ++v) x += rule.points(static_cast<Index>(v), i) * mesh.vertex(f.vertices[v]);
            sum += sign * rule.weights(i) * integrand(s.cell, lambda, x);
        }
    }
    return sum * f.measure;
}

}  // namespace

double jump_moment(const Field& field, Index face, const FacePolynomial& q, int q_degree, int rule_degree) {
    return face_integral(field, face, q_degree, rule_degree, 0, "jump_moment",
                         [&](Index c, const Bary& lambda, const Point& x) { return field.value(c, lambda) * q(x); });
}

double normal_jump_moment(const Field& field, Index face, const FacePolynomial& q, int q_degree, int rule_degree) {
    const Point n = field.layout().mesh().face(face).normal;
    return face_integral(field, face, q_degree, rule_degree, 1, "normal_jump_moment",
                         [&](Index c, const Bary& lambda, const Point& x) { return field.gradient(c, lambda).dot(n) * q(x); });
}

}  // namespace ncfem
