#pragma once

// Serialization: path sets as CSV (path_id,t,value), kernel samples as
// CSV (path_id,phi_T,log_phi_T), and JSON manifests carrying enough to
// reproduce a run byte-for-byte. All writes go through a temp file in the
// destination directory followed by a rename, so readers never observe a
// half-written artifact.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wienerlab/common.hpp"
#include "wienerlab/pricing.hpp"

namespace wienerlab::io {

using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

inline void atomic_write(const std::filesystem::path& dest, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dir = dest.has_parent_path() ? dest.parent_path() : fs::path(".");
    fs::create_directories(dir);
    const fs::path tmp = dir / (dest.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("io-failure: cannot open " + tmp.string());
        out << content;
        if (!out.good()) throw std::runtime_error("io-failure: short write to " + tmp.string());
    }
    fs::rename(tmp, dest);
}

/// 17 significant digits: doubles round-trip exactly, so identical runs
/// produce byte-identical files.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string paths_to_csv(const std::vector<SamplePath>& paths) {
    std::ostringstream os;
    os << "path_id,t,value\n";
    for (std::size_t p = 0; p < paths.size(); ++p)
        for (std::size_t i = 0; i < paths[p].size(); ++i)
            os << p << ',' << format_double(paths[p].times[i]) << ','
               << format_double(paths[p].values[i]) << '\n';
    return os.str();
}

inline void write_paths_csv(const std::filesystem::path& dest,
                            const std::vector<SamplePath>& paths) {
    atomic_write(dest, paths_to_csv(paths));
}

inline std::vector<SamplePath> read_paths_csv(const std::filesystem::path& src) {
    std::ifstream in(src);
    if (!in) throw std::runtime_error("io-failure: cannot open " + src.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("path_id,t,value", 0) != 0)
        throw std::runtime_error("invalid-config: bad path CSV header in " + src.string());
    std::vector<SamplePath> paths;
    long long cur = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        long long pid;
        double t, v;
        if (std::sscanf(line.c_str(), "%lld,%lf,%lf", &pid, &t, &v) != 3)
            throw std::runtime_error("invalid-config: bad path CSV row: " + line);
        if (pid != cur) {
            if (pid != cur + 1)
                throw std::runtime_error("invalid-config: path ids must be consecutive");
            paths.emplace_back();
            cur = pid;
        }
        paths.back().times.push_back(t);
        paths.back().values.push_back(v);
    }
    for (auto& p : paths) p.validate();
    return paths;
}

inline void write_kernel_csv(const std::filesystem::path& dest,
                             const std::vector<pricing::KernelSample>& samples) {
    std::ostringstream os;
    os << "path_id,phi_T,log_phi_T\n";
    for (std::size_t i = 0; i < samples.size(); ++i)
        os << i << ',' << format_double(samples[i].phi_T) << ','
           << format_double(samples[i].log_phi_T) << '\n';
    atomic_write(dest, os.str());
}

inline void write_json(const std::filesystem::path& dest, const json& doc) {
    atomic_write(dest, doc.dump(2) + "\n");
}

inline json read_json(const std::filesystem::path& src) {
    std::ifstream in(src);
    if (!in) throw std::runtime_error("io-failure: cannot open " + src.string());
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw std::runtime_error("invalid-config: " + src.string() + ": " + e.what());
    }
    return doc;
}

}  // namespace wienerlab::io
