#include <cstring>
#include <fstream>
#include <iomanip>

#include "aggdiff/errors.hpp"
#include "aggdiff/trajectory.hpp"

namespace aggdiff {
namespace {

constexpr char kMagic[] = "AGGDIFF-TRAJ-1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw FormatError("truncated header length");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

// Samples are stored little-endian regardless of host order.
void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  write_u64(os, bits);
}

}  // namespace

void write_trajectory(const DensityTrajectory& traj, const std::filesystem::path& path) {
  nlohmann::json header;
  header["grid"] = traj.grid().to_json();
  header["noisy"] = traj.noisy();
  header["provenance"] = traj.provenance().to_json();
  header["layout"] = "row-major [l][mx][my], float64 little-endian";
  header["count"] = traj.values().size();
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.write(kMagic, static_cast<std::streamsize>(kMagicLen));
  write_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double v : traj.values()) write_f64(os, v);
  if (!os) throw FormatError("write failed for " + path.string());
}

DensityTrajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  char magic[kMagicLen];
  is.read(magic, static_cast<std::streamsize>(kMagicLen));
  if (!is || std::memcmp(magic, kMagic, kMagicLen) != 0) {
    throw FormatError(path.string() + " is not a trajectory container");
  }
  const std::uint64_t len = read_u64(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw FormatError("truncated header");
  const auto header = nlohmann::json::parse(text);
  Grid grid = Grid::from_json(header.at("grid"));
  const std::size_t count = header.at("count").get<std::size_t>();
  std::vector<double> values(count);
  for (auto& v : values) {
    const std::uint64_t bits = read_u64(is);
    std::memcpy(&v, &bits, sizeof v);
  }
  return DensityTrajectory(std::move(grid), std::move(values), header.at("noisy").get<bool>(),
                           Provenance::from_json(header.at("provenance")));
}

void export_trajectory_csv(const DensityTrajectory& traj, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  const Grid& g = traj.grid();
  os << std::setprecision(17);
  os << (g.dim() == 1 ? "t,x,rho\n" : "t,x,y,rho\n");
  for (int l = 0; l <= g.steps(); ++l) {
    auto s = traj.slice(l);
    for (int mx = -g.active_half_count(0); mx <= g.active_half_count(0); ++mx) {
      for (int my = -g.active_half_count(1); my <= g.active_half_count(1); ++my) {
        os << g.t(l) << ',' << g.x(mx) << ',';
        if (g.dim() == 2) os << g.y(my) << ',';
        os << s[g.flat(mx, my)] << '\n';
      }
    }
  }
}

}  // namespace aggdiff
