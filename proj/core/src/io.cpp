#include "oodkit/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace oodkit {

namespace {

constexpr char kMagic[4] = {'O', 'O', 'D', 'T'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kDtypeU8 = 1;

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw FormatError("cannot open file for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw FormatError("write failed: " + path.string());
}

struct Header {
    std::uint8_t dtype;
    std::vector<std::uint32_t> shape;
    std::size_t payload_offset;
};

Header parse_header(const std::string& bytes, const std::filesystem::path& path) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 8)
        throw FormatError("truncated header in " + path.string());
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("bad magic in " + path.string() + " (expected \"OODT\")");
    if (p[4] != kVersion)
        throw FormatError("unsupported version " + std::to_string(p[4]) + " in " + path.string());
    const std::uint8_t dtype = p[5];
    if (dtype != kDtypeF32 && dtype != kDtypeU8)
        throw FormatError("unknown dtype code " + std::to_string(dtype) + " in " + path.string());
    const std::uint8_t rank = p[6];
    if (rank == 0)
        throw FormatError("rank must be >= 1 in " + path.string());
    if (p[7] != 0)
        throw FormatError("nonzero reserved byte in " + path.string());
    if (bytes.size() < 8 + 4u * rank)
        throw FormatError("truncated dims in " + path.string());
    Header h;
    h.dtype = dtype;
    for (std::uint8_t i = 0; i < rank; ++i)
        h.shape.push_back(get_u32(p + 8 + 4 * i));
    h.payload_offset = 8 + 4u * rank;
    return h;
}

std::string make_header(std::uint8_t dtype, std::span<const std::uint32_t> shape) {
    if (shape.size() > 255)
        throw FormatError("rank exceeds format limit of 255");
    std::string out(kMagic, 4);
    out.push_back(static_cast<char>(kVersion));
    out.push_back(static_cast<char>(dtype));
    out.push_back(static_cast<char>(shape.size()));
    out.push_back(0);
    for (auto d : shape) put_u32(out, d);
    return out;
}

}  // namespace

Tensor read_tensor(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    const Header h = parse_header(bytes, path);
    if (h.dtype != kDtypeF32)
        throw FormatError("expected f32 dtype in " + path.string());
    const std::size_t count = shape_product(h.shape);
    if (bytes.size() != h.payload_offset + 4 * count)
        throw FormatError("payload size mismatch in " + path.string() + ": expected " +
                          std::to_string(4 * count) + " bytes, got " +
                          std::to_string(bytes.size() - h.payload_offset));
    std::vector<float> data(count);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + h.payload_offset;
    for (std::size_t i = 0; i < count; ++i)
        data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
    return Tensor(std::move(h.shape), std::move(data));
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
    std::string out = make_header(kDtypeF32, t.shape());
    out.reserve(out.size() + 4 * t.size());
    for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    write_file(path, out);
}

LabelVector read_labels(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    const Header h = parse_header(bytes, path);
    if (h.dtype != kDtypeU8)
        throw FormatError("expected u8 dtype in " + path.string());
    const std::size_t count = shape_product(h.shape);
    if (bytes.size() != h.payload_offset + count)
        throw FormatError("payload size mismatch in " + path.string());
    std::vector<std::uint8_t> values(count);
    std::memcpy(values.data(), bytes.data() + h.payload_offset, count);
    return LabelVector(std::move(h.shape), std::move(values));
}

void write_labels(const LabelVector& v, const std::filesystem::path& path) {
    std::string out = make_header(kDtypeU8, v.shape());
    out.append(reinterpret_cast<const char*>(v.values().data()), v.size());
    write_file(path, out);
}

Tensor read_tensor_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open file: " + path.string());
    std::vector<float> data;
    std::vector<std::size_t> row_lengths;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t count = 0;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                data.push_back(std::stof(cell));
            } catch (const std::exception&) {
                throw FormatError("bad CSV value \"" + cell + "\" in " + path.string());
            }
            ++count;
        }
        row_lengths.push_back(count);
    }
    if (row_lengths.empty())
        throw FormatError("empty CSV file: " + path.string());
    for (auto len : row_lengths)
        if (len != row_lengths[0])
            throw FormatError("ragged CSV rows in " + path.string());
    if (row_lengths.size() == 1)
        return Tensor({static_cast<std::uint32_t>(row_lengths[0])}, std::move(data));
    return Tensor({static_cast<std::uint32_t>(row_lengths.size()),
                   static_cast<std::uint32_t>(row_lengths[0])},
                  std::move(data));
}

void write_tensor_csv(const Tensor& t, const std::filesystem::path& path) {
    if (t.rank() > 2)
        throw InvalidInput("CSV export supports rank-1 and rank-2 tensors only");
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw FormatError("cannot open file for writing: " + path.string());
    const std::size_t cols = t.rank() == 2 ? t.dim(1) : t.dim(0);
    const std::size_t rows = t.size() / cols;
    out.precision(9);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) out << ',';
            out << t[r * cols + c];
        }
        out << '\n';
    }
}

}  // namespace oodkit
