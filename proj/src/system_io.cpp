#include "nnmrom/system_io.hpp"

#include <fstream>
#include <sstream>

namespace nnmrom {

namespace {

[[noreturn]] void fail(const std::string& path, int line_no, const std::string& msg) {
    throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + msg);
}

int parse_endpoint(const std::string& tok, const std::string& path, int line_no) {
    if (tok == "ground") return kGround;
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        fail(path, line_no, "bad element endpoint '" + tok + "'");
    }
}

} // namespace

MdofSystem load_system(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open system file " + path);

    MdofSystem sys;
    double mass_damping_ratio = -1.0;
    int expected_channel = 0;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (eq == std::string::npos) fail(path, line_no, "expected 'key = value'");

        std::string key = line.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        std::istringstream rest(line.substr(eq + 1));
        std::vector<std::string> tok;
        for (std::string t; rest >> t;) tok.push_back(t);

        auto want = [&](std::size_t n) {
            if (tok.size() != n)
                fail(path, line_no, "expected " + std::to_string(n) + " values for " + key);
        };
        auto num = [&](std::size_t i) {
            try {
                return std::stod(tok[i]);
            } catch (const std::exception&) {
                fail(path, line_no, "bad number '" + tok[i] + "'");
            }
        };

        if (key == "n_dof") {
            want(1);
            sys.n_dof = static_cast<int>(num(0));
            if (sys.n_dof <= 0) fail(path, line_no, "n_dof must be positive");
            if (sys.masses.size() == 0) sys.masses = Vec::Zero(sys.n_dof);
        } else if (key == "mass") {
            if (sys.n_dof == 0) fail(path, line_no, "n_dof must be set before mass");
            want(2);
            if (tok[0] == "all") {
                sys.masses = Vec::Constant(sys.n_dof, num(1));
            } else {
                const int dof = static_cast<int>(num(0));
                if (dof < 0 || dof >= sys.n_dof) fail(path, line_no, "mass dof out of range");
                sys.masses[dof] = num(1);
            }
        } else if (key == "mass_damping_ratio") {
            want(1);
            mass_damping_ratio = num(0);
        } else if (key == "spring" || key == "damper" || key == "cubic") {
            want(3);
            Element e{parse_endpoint(tok[0], path, line_no),
                      parse_endpoint(tok[1], path, line_no), num(2)};
            if (key == "spring")
                sys.linear_springs.push_back(e);
            else if (key == "damper")
                sys.linear_dampers.push_back(e);
            else
                sys.cubic_springs.push_back(e);
        } else if (key == "boucwen") {
            want(6);
            BoucWenLink link;
            link.a = parse_endpoint(tok[0], path, line_no);
            link.b = parse_endpoint(tok[1], path, line_no);
            link.params = BoucWenParams::from_amplitude(num(2), num(3), num(4), num(5));
            sys.bouc_wen_links.push_back(link);
        } else if (key == "force") {
            want(2);
            const int channel = static_cast<int>(num(0));
            if (channel != expected_channel)
                fail(path, line_no, "force channels must appear in order starting at 0");
            ++expected_channel;
            sys.force_map.push_back(static_cast<int>(num(1)));
        } else {
            fail(path, line_no, "unknown key '" + key + "'");
        }
    }

    try {
        sys.validate();
        if (mass_damping_ratio >= 0.0) sys.set_mass_damping_from_ratio(mass_damping_ratio);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return sys;
}

MdofSystem system_preset(const std::string& name) {
    if (name == "single_nl_20dof") return make_single_nl_chain();
    if (name == "multi_nl_20dof") return make_multi_nl_chain();
    if (name == "boucwen_chain")
        return make_bouc_wen_chain(16, 1.65e5, 6.3e7,
                                   BoucWenParams::from_amplitude(0.3, 1e-4, 1.0, 2e8), 0.04,
                                   {7, 15});
    throw std::invalid_argument("unknown system preset '" + name + "'");
}

bool is_system_preset(const std::string& name) {
    return name == "single_nl_20dof" || name == "multi_nl_20dof" || name == "boucwen_chain";
}

} // namespace nnmrom
