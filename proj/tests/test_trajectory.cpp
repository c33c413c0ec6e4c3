#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nnmrom/trajectory.hpp"

#include <cstdio>
#include <fstream>

using namespace nnmrom;

namespace {

Trajectory sample_trajectory(bool with_velocities) {
    Trajectory t;
    t.dt = 0.01;
    t.displacements = Mat::Random(3, 25);
    if (with_velocities) t.velocities = Mat::Random(3, 25);
    t.forcing.dt = 0.01;
    t.forcing.samples = Mat::Random(2, 25);
    t.forcing.channel_map = {0, 2};
    return t;
}

} // namespace

TEST_CASE("binary trajectory round-trips bit-exactly") {
    for (bool vel : {true, false}) {
        const Trajectory t = sample_trajectory(vel);
        const std::string path = "traj_roundtrip.bin";
        save_trajectory_bin(t, path);
        const Trajectory r = load_trajectory_bin(path);
        CHECK(r.dt == t.dt);
        CHECK(r.displacements == t.displacements);
        CHECK(r.velocities.has_value() == vel);
        if (vel) CHECK(*r.velocities == *t.velocities);
        CHECK(r.forcing.samples == t.forcing.samples);
        CHECK(r.forcing.channel_map == t.forcing.channel_map);
        std::remove(path.c_str());
    }
}

TEST_CASE("csv export carries the documented header") {
    const Trajectory t = sample_trajectory(true);
    const std::string path = "traj_header.csv";
    save_trajectory_csv(t, path);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,u_0,u_1,u_2,f_0,f_1");
    std::string line;
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 25);
    std::remove(path.c_str());
}

TEST_CASE("corrupt trajectory files are rejected") {
    const std::string path = "traj_bad.bin";
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOTAMAGC12345";
    }
    CHECK_THROWS(load_trajectory_bin(path));
    std::remove(path.c_str());
}
