#include "nnmrom/trajectory.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace nnmrom {

namespace {

constexpr char kMagic[8] = {'N', 'R', 'O', 'M', 'T', 'R', 'A', 'J'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagVelocities = 1u;

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("trajectory file truncated");
    return v;
}

// Row-major so each DOF's history is contiguous.
void write_matrix(std::ostream& os, const Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            write_pod(os, m(r, c));
}

Mat read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = read_pod<double>(is);
    return m;
}

} // namespace

void Trajectory::validate() const {
    if (dt <= 0.0) throw std::invalid_argument("Trajectory: dt must be positive");
    if (velocities && velocities->cols() != displacements.cols())
        throw std::invalid_argument("Trajectory: velocity column count mismatch");
    if (forcing.samples.size() > 0 && forcing.samples.cols() != displacements.cols())
        throw std::invalid_argument("Trajectory: forcing column count mismatch");
}

void save_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "t";
    for (int i = 0; i < traj.n_dof(); ++i) os << ",u_" << i;
    for (int c = 0; c < traj.forcing.channels(); ++c) os << ",f_" << c;
    os << "\n";
    char buf[32];
    for (Eigen::Index k = 0; k < traj.steps(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(k) * traj.dt);
        os << buf;
        for (int i = 0; i < traj.n_dof(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", traj.displacements(i, k));
            os << ',' << buf;
        }
        for (int c = 0; c < traj.forcing.channels(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", traj.forcing.samples(c, k));
            os << ',' << buf;
        }
        os << "\n";
    }
}

void save_trajectory_bin(const Trajectory& traj, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kVersion);
    write_pod(os, traj.velocities ? kFlagVelocities : 0u);
    write_pod(os, static_cast<std::uint32_t>(traj.n_dof()));
    write_pod(os, static_cast<std::uint32_t>(traj.forcing.channels()));
    write_pod(os, static_cast<std::uint64_t>(traj.steps()));
    write_pod(os, traj.dt);
    for (int dof : traj.forcing.channel_map) write_pod(os, static_cast<std::uint32_t>(dof));
    write_matrix(os, traj.displacements);
    if (traj.velocities) write_matrix(os, *traj.velocities);
    write_matrix(os, traj.forcing.samples);
}

Trajectory load_trajectory_bin(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path + ": not a trajectory file (bad magic)");
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kVersion)
        throw std::runtime_error(path + ": unsupported trajectory version");
    const auto flags = read_pod<std::uint32_t>(is);
    const auto n_dof = read_pod<std::uint32_t>(is);
    const auto n_channels = read_pod<std::uint32_t>(is);
    const auto steps = read_pod<std::uint64_t>(is);
    Trajectory traj;
    traj.dt = read_pod<double>(is);
    traj.forcing.dt = traj.dt;
    traj.forcing.channel_map.resize(n_channels);
    for (auto& dof : traj.forcing.channel_map)
        dof = static_cast<int>(read_pod<std::uint32_t>(is));
    traj.displacements = read_matrix(is, n_dof, static_cast<Eigen::Index>(steps));
    if (flags & kFlagVelocities)
        traj.velocities = read_matrix(is, n_dof, static_cast<Eigen::Index>(steps));
    traj.forcing.samples = read_matrix(is, n_channels, static_cast<Eigen::Index>(steps));
    traj.validate();
    return traj;
}

} // namespace nnmrom
