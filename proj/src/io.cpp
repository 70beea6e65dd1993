#include "mstab/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mstab::io {

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        const std::string err = std::strerror(errno);
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "': " + err);
    }
}

std::string path_to_csv(const series::PathSample& p) {
    std::ostringstream out;
    out.precision(17);
    out << "t,value\n";
    for (size_t i = 0; i < p.times.size(); ++i)
        out << p.times[i] << "," << p.values[i] << "\n";
    return out.str();
}

void write_path_csv(const series::PathSample& p, const std::string& path) {
    atomic_write(path, path_to_csv(p));
}

namespace {
constexpr char kMagic[8] = {'M', 'S', 'P', 'A', 'T', 'H', '0', '1'};

template <typename T>
void put(std::string& buf, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf.append(b, sizeof(T));
}
} // namespace

void write_path_binary(const series::PathSample& p, const std::string& path) {
    std::string buf;
    buf.reserve(32 + 16 * p.times.size());
    buf.append(kMagic, 8);
    buf.push_back(static_cast<char>(p.tag));
    buf.append(7, '\0');
    put<uint64_t>(buf, p.seed);
    put<uint64_t>(buf, p.terms);
    put<uint64_t>(buf, p.times.size());
    for (double t : p.times) put<double>(buf, t);
    for (double v : p.values) put<double>(buf, v);
    atomic_write(path, buf);
}

series::PathSample read_path_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 40 || std::memcmp(buf.data(), kMagic, 8) != 0)
        throw std::runtime_error("'" + path + "' is not a path cache file");
    series::PathSample p;
    p.tag = series::tag_from_char(buf[8]);
    uint64_t seed, terms, count;
    std::memcpy(&seed, buf.data() + 16, 8);
    std::memcpy(&terms, buf.data() + 24, 8);
    std::memcpy(&count, buf.data() + 32, 8);
    if (buf.size() != 40 + 16 * count)
        throw std::runtime_error("'" + path + "' is truncated");
    p.seed = seed;
    p.terms = terms;
    p.times.resize(count);
    p.values.resize(count);
    std::memcpy(p.times.data(), buf.data() + 40, 8 * count);
    std::memcpy(p.values.data(), buf.data() + 40 + 8 * count, 8 * count);
    return p;
}

std::vector<double> read_value_column(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            if (out.empty()) continue; // header row
            throw std::runtime_error("'" + path + "': cannot parse '" + line + "'");
        }
    }
    if (out.empty()) throw std::runtime_error("'" + path + "' holds no numeric rows");
    return out;
}

} // namespace mstab::io
