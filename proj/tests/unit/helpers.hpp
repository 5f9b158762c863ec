#pragma once

#include <fstream>
#include <sstream>
#include <string>

inline std::string repo_path(const std::string& rel) {
    return std::string(VASIM_SOURCE_DIR) + "/" + rel;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}
