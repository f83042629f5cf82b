#pragma once

#include "ncfem/mesh.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace ncfem {

/// Unit square split into n x n squares, each cut by the diagonal parallel to
/// the line x = y (2 n^2 triangles).
Mesh square_mesh(int n);

/// Unit square split into n x n squares, each cut by both diagonals
/// (4 n^2 triangles, one extra vertex per square).
Mesh crisscross_mesh(int n);

/// L-shaped domain (-1, 1)^2 minus [0, 1) x (-1, 0], 2n x 2n cells with the
/// square pattern on the remaining three quadrants.
Mesh lshape_mesh(int n);

/// Text format: "dim nv ne", nv coordinate lines, ne lines of zero-based
/// vertex ids. The reader rejects short input and trailing garbage.
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);

/// "gen:square:n", "gen:crisscross:n", "gen:lshape:n" or a mesh file path.
std::shared_ptr<const Mesh> make_mesh(const std::string& source);

/// Meshes of a refinement study: generator sources are regenerated with
/// n, 2n, 4n, ... (element numbering stays in the generator pattern); files
/// are refined with refine_uniform.
std::vector<std::shared_ptr<const Mesh>> refinement_levels(const std::string& source, int levels);

/// FNV-1a hash of the text serialization.
std::uint64_t mesh_hash(const Mesh& mesh);

}  // namespace ncfem
