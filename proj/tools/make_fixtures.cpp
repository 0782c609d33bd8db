// Regenerates the bundled fixture files from their construction code.
#include <cstdio>
#include <filesystem>

#include "ceres_causal/fixtures.hpp"
#include "ceres_causal/report.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : ceres::fixtures::directory();
  try {
    for (const auto& f : ceres::fixtures::files()) {
      ceres::write_file(dir / f.name, f.contents);
      std::printf("wrote %s\n", (dir / f.name).string().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "make_fixtures: %s\n", e.what());
    return 1;
  }
  return 0;
}
