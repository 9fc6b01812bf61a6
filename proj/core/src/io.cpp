#include "metassl/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace metassl {

namespace {

constexpr uint8_t kVersion = 1;

void write_header(std::ofstream& f, const char magic[4], uint32_t h, uint32_t w, uint32_t c) {
    f.write(magic, 4);
    f.put(static_cast<char>(kVersion));
    const uint32_t dims[3] = {h, w, c};
    f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
}

struct Header {
    uint32_t h, w, c;
};

Header read_header(std::ifstream& f, const char* expect_magic, const std::string& path) {
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, expect_magic, 4) != 0)
        throw std::runtime_error("read " + path + ": magic mismatch");
    const int version = f.get();
    if (version != kVersion) throw std::runtime_error("read " + path + ": unsupported version");
    Header hd{};
    f.read(reinterpret_cast<char*>(&hd), sizeof(hd));
    if (!f) throw std::runtime_error("read " + path + ": truncated header");
    return hd;
}

template <typename T>
void write_payload(std::ofstream& f, const std::vector<T>& v) {
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void read_payload(std::ifstream& f, std::vector<T>& v, const std::string& path) {
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(T)));
    if (!f) throw std::runtime_error("read " + path + ": truncated payload");
    f.peek();
    if (!f.eof()) throw std::runtime_error("read " + path + ": trailing bytes");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    return f;
}

}  // namespace

void write_pmap(const ProbMap& p, const std::string& path) {
    auto f = open_out(path);
    write_header(f, "PMAP", p.height, p.width, p.num_classes);
    write_payload(f, p.data);
    if (!f) throw std::runtime_error("write " + path + " failed");
}

ProbMap read_pmap(const std::string& path) {
    auto f = open_in(path);
    const Header hd = read_header(f, "PMAP", path);
    ProbMap p(static_cast<int>(hd.h), static_cast<int>(hd.w), static_cast<int>(hd.c));
    read_payload(f, p.data, path);
    validate(p);
    return p;
}

void write_lmap(const LabelMap& y, const std::string& path) {
    auto f = open_out(path);
    write_header(f, "LMAP", y.height, y.width, 1);
    write_payload(f, y.data);
    if (!f) throw std::runtime_error("write " + path + " failed");
}

LabelMap read_lmap(const std::string& path) {
    auto f = open_in(path);
    const Header hd = read_header(f, "LMAP", path);
    LabelMap y(static_cast<int>(hd.h), static_cast<int>(hd.w));
    read_payload(f, y.data, path);
    return y;
}

void write_qmap(const RegionMap& r, const std::string& path) {
    auto f = open_out(path);
    write_header(f, "QMAP", r.height, r.width, 1);
    std::vector<uint8_t> codes(r.data.size());
    for (size_t i = 0; i < codes.size(); ++i) codes[i] = static_cast<uint8_t>(r.data[i]);
    write_payload(f, codes);
    if (!f) throw std::runtime_error("write " + path + " failed");
}

RegionMap read_qmap(const std::string& path) {
    auto f = open_in(path);
    const Header hd = read_header(f, "QMAP", path);
    RegionMap r(static_cast<int>(hd.h), static_cast<int>(hd.w));
    std::vector<uint8_t> codes(r.data.size());
    read_payload(f, codes, path);
    for (size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] > 3) throw std::runtime_error("read " + path + ": invalid region code");
        r.data[i] = static_cast<Region>(codes[i]);
    }
    return r;
}

void write_img(const Image& img, const std::string& path) {
    auto f = open_out(path);
    write_header(f, "IMG0", img.height, img.width, img.channels);
    write_payload(f, img.data);
    if (!f) throw std::runtime_error("write " + path + " failed");
}

Image read_img(const std::string& path) {
    auto f = open_in(path);
    const Header hd = read_header(f, "IMG0", path);
    Image img(static_cast<int>(hd.h), static_cast<int>(hd.w), static_cast<int>(hd.c));
    read_payload(f, img.data, path);
    return img;
}

void write_region_pgm(const RegionMap& r, const std::string& path) {
    static const uint8_t levels[4] = {255, 170, 85, 0};
    auto f = open_out(path);
    f << "P5\n" << r.width << " " << r.height << "\n255\n";
    for (Region code : r.data) f.put(static_cast<char>(levels[static_cast<size_t>(code)]));
    if (!f) throw std::runtime_error("write " + path + " failed");
}

void write_label_pgm(const LabelMap& y, int num_classes, const std::string& path) {
    auto f = open_out(path);
    f << "P5\n" << y.width << " " << y.height << "\n255\n";
    const int denom = num_classes > 1 ? num_classes - 1 : 1;
    for (uint16_t v : y.data) f.put(static_cast<char>(v * 255 / denom));
    if (!f) throw std::runtime_error("write " + path + " failed");
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace metassl
