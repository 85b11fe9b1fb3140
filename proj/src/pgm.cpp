#include "gazekit/pgm.hpp"

#include <cstdio>
#include <fstream>

namespace gazekit {

namespace {

struct Cursor {
    std::span<const uint8_t> bytes;
    size_t pos = 0;
    const std::string& origin;

    [[noreturn]] void err(const std::string& msg) const {
        fail(Err::malformed_input, origin + ": " + msg + " at byte " + std::to_string(pos));
    }

    int peek() const { return pos < bytes.size() ? bytes[pos] : -1; }
    int get() { return pos < bytes.size() ? bytes[pos++] : -1; }

    // Whitespace and '#' comments separate header tokens.
    void skip_space_and_comments() {
        for (;;) {
            int c = peek();
            if (c == '#') {
                while (c != -1 && c != '\n') c = get();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                get();
            } else {
                return;
            }
        }
    }

    int read_uint(const char* what) {
        skip_space_and_comments();
        if (peek() < '0' || peek() > '9') err(std::string("expected ") + what);
        long long v = 0;
        while (peek() >= '0' && peek() <= '9') {
            v = v * 10 + (get() - '0');
            if (v > 1 << 30) err(std::string(what) + " too large");
        }
        return static_cast<int>(v);
    }
};

}  // namespace

GrayImage parse_pgm(std::span<const uint8_t> bytes, const std::string& origin) {
    Cursor c{bytes, 0, origin};
    if (c.get() != 'P' || c.get() != '5') c.err("not a P5 PGM (bad magic)");
    const int w = c.read_uint("width");
    const int h = c.read_uint("height");
    const int maxval = c.read_uint("maxval");
    if (w < 1 || h < 1) c.err("dimensions must be >= 1");
    if (maxval != 255) c.err("maxval must be 255, got " + std::to_string(maxval));
    // Exactly one whitespace byte separates the header from raster data.
    const int sep = c.get();
    if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n') c.err("missing header terminator");
    const size_t need = static_cast<size_t>(w) * h;
    if (bytes.size() - c.pos < need) c.err("raster data truncated");

    GrayImage img(w, h);
    std::copy(bytes.begin() + c.pos, bytes.begin() + c.pos + need, img.data.begin());
    return img;
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), Err::io, "cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_pgm(std::span(reinterpret_cast<const uint8_t*>(buf.data()), buf.size()),
                     path.string());
}

std::string pgm_bytes(const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
    return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    require(!img.empty(), Err::malformed_input, "refusing to write empty image");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), Err::io, "cannot write " + path.string());
    const std::string bytes = pgm_bytes(img);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(f.good(), Err::io, "short write to " + path.string());
}

void write_pgm(const std::filesystem::path& path, const BinaryImage& img) {
    GrayImage g(img.width, img.height);
    for (size_t i = 0; i < img.data.size(); ++i) g.data[i] = img.data[i] ? 255 : 0;
    write_pgm(path, g);
}

}  // namespace gazekit
