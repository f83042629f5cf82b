#include "ncfem/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace ncfem {

namespace {

void add_square_cell(std::vector<std::vector<Index>>& elements, Index a, Index b, Index c, Index d) {
    // a = (i, j), b = (i+1, j), c = (i+1, j+1), d = (i, j+1); diagonal a-c
    elements.push_back({a, b, c});
    elements.push_back({a, c, d});
}

}  // namespace

Mesh square_mesh(int n) {
    if (n < 1) throw MeshError("square_mesh: n must be positive");
    const Index m = n + 1;
    Mat v(2, m * m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i) v.col(j * m + i) << double(i) / n, double(j) / n;
    std::vector<std::vector<Index>> elements;
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
            add_square_cell(elements, j * m + i, j * m + i + 1, (j + 1) * m + i + 1, (j + 1) * m + i);
    return Mesh(std::move(v), std::move(elements));
}

Mesh crisscross_mesh(int n) {
    if (n < 1) throw MeshError("crisscross_mesh: n must be positive");
    const Index m = n + 1;
    Mat v(2, m * m + Index(n) * n);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i) v.col(j * m + i) << double(i) / n, double(j) / n;
    std::vector<std::vector<Index>> elements;
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) {
            const Index c = m * m + j * n + i;
            v.col(c) << (i + 0.5) / n, (j + 0.5) / n;
            const Index a = j * m + i, b = a + 1, d = a + m + 1, e = a + m;
            elements.push_back({a, b, c});
            elements.push_back({b, d, c});
            elements.push_back({d, e, c});
            elements.push_back({e, a, c});
        }
    return Mesh(std::move(v), std::move(elements));
}

Mesh lshape_mesh(int n) {
    if (n < 1) throw MeshError("lshape_mesh: n must be positive");
    const Index cells = 2 * n, m = cells + 1;
    auto removed = [&](Index i, Index j) { return i >= n && j < n; };
    std::vector<Index> id(static_cast<std::size_t>(m * m), -1);
    std::vector<std::vector<Index>> elements;
    std::vector<std::pair<double, double>> coords;
    auto vertex = [&](Index i, Index j) {
        auto& slot = id[static_cast<std::size_t>(j * m + i)];
        if (slot < 0) {
            slot = static_cast<Index>(coords.size());
            coords.emplace_back(-1.0 + double(i) / n, -1.0 + double(j) / n);
        }
        return slot;
    };
    for (Index j = 0; j < cells; ++j)
        for (Index i = 0; i < cells; ++i) {
            if (removed(i, j)) continue;
            add_square_cell(elements, vertex(i, j), vertex(i + 1, j), vertex(i + 1, j + 1), vertex(i, j + 1));
        }
    Mat v(2, static_cast<Index>(coords.size()));
    for (std::size_t k = 0; k < coords.size(); ++k) v.col(static_cast<Index>(k)) << coords[k].first, coords[k].second;
    return Mesh(std::move(v), std::move(elements));
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
    char buf[64];
    out << mesh.dim() << ' ' << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        for (int i = 0; i < mesh.dim(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", mesh.vertices()(i, v));
            out << (i ? " " : "") << buf;
        }
        out << '\n';
    }
    for (Index k = 0; k < mesh.num_elements(); ++k) {
        auto e = mesh.element(k);
        for (std::size_t i = 0; i < e.size(); ++i) out << (i ? " " : "") << e[i];
        out << '\n';
    }
}

namespace {

// Reads one nonempty line and splits it into exactly `count` tokens.
std::vector<std::string> tokens(std::istream& in, std::size_t count, const std::string& what) {
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::vector<std::string> out;
        std::string t;
        while (ss >> t) out.push_back(t);
        if (out.empty()) continue;
        if (out.size() != count)
            throw MeshError("read_mesh: " + what + ": expected " + std::to_string(count) + " fields, got " +
                            std::to_string(out.size()));
        return out;
    }
    throw MeshError("read_mesh: unexpected end of input while reading " + what);
}

template <typename T>
T parse(const std::string& s, const std::string& what) {
    std::istringstream ss(s);
    T value{};
    ss >> value;
    if (ss.fail() || !ss.eof()) throw MeshError("read_mesh: invalid " + what + " '" + s + "'");
    return value;
}

}  // namespace

Mesh read_mesh(std::istream& in) {
    auto header = tokens(in, 3, "header");
    const int dim = parse<int>(header[0], "dimension");
    const long nv = parse<long>(header[1], "vertex count");
    const long ne = parse<long>(header[2], "element count");
    if (dim < 1 || nv < 0 || ne < 0) throw MeshError("read_mesh: invalid header");
    Mat v(dim, nv);
    for (long i = 0; i < nv; ++i) {
        auto t = tokens(in, static_cast<std::size_t>(dim), "vertex " + std::to_string(i));
        for (int c = 0; c < dim; ++c) v(c, i) = parse<double>(t[static_cast<std::size_t>(c)], "coordinate");
    }
    std::vector<std::vector<Index>> elements(static_cast<std::size_t>(ne));
    for (long k = 0; k < ne; ++k) {
        auto t = tokens(in, static_cast<std::size_t>(dim + 1), "element " + std::to_string(k));
        for (auto& s : t) elements[static_cast<std::size_t>(k)].push_back(parse<long>(s, "vertex id"));
    }
    std::string rest;
    if (in >> rest) throw MeshError("read_mesh: trailing garbage '" + rest + "'");
    return Mesh(std::move(v), std::move(elements));
}

Mesh read_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MeshError("read_mesh: cannot open '" + path + "'");
    return read_mesh(in);
}

std::shared_ptr<const Mesh> make_mesh(const std::string& source) {
    if (source.rfind("gen:", 0) == 0) {
        const auto colon = source.find(':', 4);
        if (colon == std::string::npos) throw ConfigError("mesh generator needs the form gen:name:n");
        const std::string name = source.substr(4, colon - 4);
        int n = 0;
        try {
            std::size_t used = 0;
            n = std::stoi(source.substr(colon + 1), &used);
            if (used != source.size() - colon - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("invalid generator size in '" + source + "'");
        }
        if (n < 1) throw ConfigError("generator size must be positive");
        if (name == "square") return std::make_shared<const Mesh>(square_mesh(n));
        if (name == "crisscross") return std::make_shared<const Mesh>(crisscross_mesh(n));
        if (name == "lshape") return std::make_shared<const Mesh>(lshape_mesh(n));
        throw ConfigError("unknown mesh generator '" + name + "'");
    }
    return std::make_shared<const Mesh>(read_mesh_file(source));
}

std::vector<std::shared_ptr<const Mesh>> refinement_levels(const std::string& source, int levels) {
    if (levels < 1) throw ConfigError("a refinement study needs at least one level");
    std::vector<std::shared_ptr<const Mesh>> out{make_mesh(source)};
    const bool generated = source.rfind("gen:", 0) == 0;
    const std::string stem = generated ? source.substr(0, source.rfind(':') + 1) : std::string();
    const int n = generated ? std::stoi(source.substr(stem.size())) : 0;
    for (int l = 1; l < levels; ++l)
        out.push_back(generated ? make_mesh(stem + std::to_string(n << l)) : std::make_shared<const Mesh>(refine_uniform(*out.back())));
    return out;
}

std::uint64_t mesh_hash(const Mesh& mesh) {
    std::ostringstream out;
    write_mesh(out, mesh);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : out.str()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace ncfem
