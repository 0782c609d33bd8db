#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ceres_causal/qp.hpp"
#include "ceres_causal/scm.hpp"

namespace ceres::fixtures {

/// All variables binary; random tables from a fixed stream.
ScmSpec demo2();

/// Four states everywhere, built so the U-corrupted visual readout of M is
/// biased while the depth readout is not:
///   P(U) = (0.4, 0.3, 0.2, 0.1), X | U and T | Z put 0.7 on the diagonal,
///   M | X and Md | X put 0.85 on the diagonal,
///   the Mv corruption is a point mass at (x + 1 + u mod 3) mod 4 != x,
///   Y | T,M,Z,U = softmax(3[y=m] + 1.5[y=u] + 0.5[y=t] + 0.5[y=z]).
/// Stored with corruption rho = 0.5.
ScmSpec demo4();

/// All variables with eight states; random tables from a fixed stream.
ScmSpec demo8();

/// Z and U are single-state, so adjustment is a no-op.
ScmSpec no_confounder();

/// G = 0, unique largest b: the optimum is a vertex.
QpProblem qp_linear_vertex();
/// G = I with one dominant b entry: vertex optimum with active dual constraints.
QpProblem qp_psd_vertex();
/// Strongly convex G (face eigenvalue >= 20) with b = G a* for interior a*.
QpProblem qp_interior();

std::vector<QpProblem> qp_problems();

struct FixtureFile {
  std::string name;
  std::string contents;
};

/// Every bundled fixture serialized exactly as shipped.
std::vector<FixtureFile> files();

/// $CERES_FIXTURES if set, else the source tree's fixtures directory.
std::filesystem::path directory();

std::vector<QpProblem> load_qp_problems(const std::filesystem::path& dir);

}  // namespace ceres::fixtures
