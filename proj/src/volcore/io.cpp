#include "moodkit/volcore/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

namespace moodkit::volcore {

namespace {

constexpr char kRvolMagic[8] = {'R', 'V', 'O', 'L', '0', '0', '0', '1'};
constexpr std::size_t kRvolHeader = 8 + 3 * 4 + 3 * 4 + 1;
constexpr std::size_t kNiftiHeader = 348;
constexpr std::size_t kNiftiVoxOffset = 352;

std::vector<char> slurp(const std::filesystem::path& path) {
    // gzread passes uncompressed files through unchanged.
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (f == nullptr) throw IoError("cannot open " + path.string());
    std::vector<char> buf;
    char chunk[1 << 16];
    int n = 0;
    while ((n = gzread(f, chunk, sizeof(chunk))) > 0) buf.insert(buf.end(), chunk, chunk + n);
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw FormatError(FormatErrc::truncated, "corrupt compressed stream in " + path.string());
    return buf;
}

void spit(const std::filesystem::path& path, const std::vector<char>& bytes, bool gz) {
    if (gz) {
        gzFile f = gzopen(path.string().c_str(), "wb");
        if (f == nullptr) throw IoError("cannot write " + path.string());
        const int n = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
        gzclose(f);
        if (n != static_cast<int>(bytes.size())) throw IoError("short write to " + path.string());
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

template <typename T>
void put(std::vector<char>& buf, std::size_t off, T value) {
    std::memcpy(buf.data() + off, &value, sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t off) {
    T value;
    std::memcpy(&value, buf.data() + off, sizeof(T));
    return value;
}

template <typename T>
void append(std::vector<char>& buf, T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    buf.insert(buf.end(), p, p + sizeof(T));
}

std::vector<char> rvol_header(const Dims& d, const Spacing& s, RvolDtype dtype) {
    std::vector<char> buf(kRvolMagic, kRvolMagic + 8);
    append<std::uint32_t>(buf, static_cast<std::uint32_t>(d.nx));
    append<std::uint32_t>(buf, static_cast<std::uint32_t>(d.ny));
    append<std::uint32_t>(buf, static_cast<std::uint32_t>(d.nz));
    for (float f : s) append<float>(buf, f);
    append<std::uint8_t>(buf, static_cast<std::uint8_t>(dtype));
    return buf;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<char> nifti_header(const Dims& d, const Spacing& s, std::int16_t datatype, std::int16_t bitpix) {
    std::vector<char> buf(kNiftiVoxOffset, 0);
    put<std::int32_t>(buf, 0, static_cast<std::int32_t>(kNiftiHeader));
    put<char>(buf, 38, 'r');
    const std::int16_t dim[8] = {3,
                                 static_cast<std::int16_t>(d.nx),
                                 static_cast<std::int16_t>(d.ny),
                                 static_cast<std::int16_t>(d.nz),
                                 1, 1, 1, 1};
    for (int i = 0; i < 8; ++i) put<std::int16_t>(buf, 40 + 2 * static_cast<std::size_t>(i), dim[i]);
    put<std::int16_t>(buf, 70, datatype);
    put<std::int16_t>(buf, 72, bitpix);
    const float pixdim[8] = {1.0f, s[0], s[1], s[2], 1.0f, 1.0f, 1.0f, 1.0f};
    for (int i = 0; i < 8; ++i) put<float>(buf, 76 + 4 * static_cast<std::size_t>(i), pixdim[i]);
    put<float>(buf, 108, static_cast<float>(kNiftiVoxOffset));
    put<float>(buf, 112, 1.0f);
    put<float>(buf, 116, 0.0f);
    put<std::uint8_t>(buf, 123, 2); // mm
    // Scanner-less identity sform so other readers place the grid sensibly.
    put<std::int16_t>(buf, 254, 1);
    put<float>(buf, 280, s[0]);
    put<float>(buf, 296 + 4, s[1]);
    put<float>(buf, 312 + 8, s[2]);
    std::memcpy(buf.data() + 344, "n+1\0", 4);
    return buf;
}

} // namespace

void write_rvol(const Volume3D& v, const std::filesystem::path& path) {
    if (v.empty()) throw InvalidVolume("cannot write an empty volume");
    auto buf = rvol_header(v.dims(), v.spacing(), RvolDtype::f32);
    const auto* p = reinterpret_cast<const char*>(v.values().data());
    buf.insert(buf.end(), p, p + v.size() * sizeof(float));
    spit(path, buf, false);
}

void write_rvol(const BinaryMask3D& m, const std::filesystem::path& path, Spacing spacing) {
    auto buf = rvol_header(m.dims(), spacing, RvolDtype::u8);
    const auto* p = reinterpret_cast<const char*>(m.bytes().data());
    buf.insert(buf.end(), p, p + m.size());
    spit(path, buf, false);
}

Volume3D read_rvol(const std::filesystem::path& path) {
    const auto buf = slurp(path);
    if (buf.size() < 8 || std::memcmp(buf.data(), kRvolMagic, 8) != 0)
        throw FormatError(FormatErrc::bad_magic, path.string() + ": not an RVOL file");
    if (buf.size() < kRvolHeader) throw FormatError(FormatErrc::truncated, path.string() + ": truncated RVOL header");
    const Dims d{static_cast<int>(get<std::uint32_t>(buf, 8)), static_cast<int>(get<std::uint32_t>(buf, 12)),
                 static_cast<int>(get<std::uint32_t>(buf, 16))};
    if (!d.positive()) throw FormatError(FormatErrc::bad_header, path.string() + ": non-positive dims");
    const Spacing sp{get<float>(buf, 20), get<float>(buf, 24), get<float>(buf, 28)};
    const auto dtype = static_cast<std::uint8_t>(buf[32]);
    const std::size_t n = d.count();
    std::vector<float> data(n);
    if (dtype == static_cast<std::uint8_t>(RvolDtype::f32)) {
        if (buf.size() < kRvolHeader + n * 4) throw FormatError(FormatErrc::truncated, path.string() + ": truncated payload");
        std::memcpy(data.data(), buf.data() + kRvolHeader, n * 4);
    } else if (dtype == static_cast<std::uint8_t>(RvolDtype::u8)) {
        if (buf.size() < kRvolHeader + n) throw FormatError(FormatErrc::truncated, path.string() + ": truncated payload");
        for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(static_cast<std::uint8_t>(buf[kRvolHeader + i]));
    } else {
        throw FormatError(FormatErrc::unsupported_dtype, path.string() + ": unknown RVOL dtype " + std::to_string(dtype));
    }
    return Volume3D(d, std::move(data), sp);
}

Volume3D read_nifti(const std::filesystem::path& path) {
    const auto buf = slurp(path);
    if (buf.size() < kNiftiHeader) throw FormatError(FormatErrc::truncated, path.string() + ": truncated NIfTI header");
    if (get<std::int32_t>(buf, 0) != static_cast<std::int32_t>(kNiftiHeader) ||
        (std::memcmp(buf.data() + 344, "n+1", 4) != 0 && std::memcmp(buf.data() + 344, "ni1", 4) != 0))
        throw FormatError(FormatErrc::bad_magic, path.string() + ": not a little-endian NIfTI-1 file");

    const auto ndim = get<std::int16_t>(buf, 40);
    if (ndim < 3 || ndim > 7) throw FormatError(FormatErrc::bad_header, path.string() + ": expected a 3D image");
    for (int i = 4; i <= ndim; ++i)
        if (get<std::int16_t>(buf, 40 + 2 * static_cast<std::size_t>(i)) > 1)
            throw FormatError(FormatErrc::bad_header, path.string() + ": 4D images are not supported");
    const Dims d{get<std::int16_t>(buf, 42), get<std::int16_t>(buf, 44), get<std::int16_t>(buf, 46)};
    if (!d.positive()) throw FormatError(FormatErrc::bad_header, path.string() + ": non-positive dims");

    const Spacing sp{std::abs(get<float>(buf, 80)), std::abs(get<float>(buf, 84)), std::abs(get<float>(buf, 88))};
    const auto datatype = get<std::int16_t>(buf, 70);
    float slope = get<float>(buf, 112);
    const float inter = get<float>(buf, 116);
    if (slope == 0.0f || !std::isfinite(slope)) slope = 1.0f;
    const auto offset = static_cast<std::size_t>(std::max(get<float>(buf, 108), static_cast<float>(kNiftiHeader)));

    std::size_t width = 0;
    switch (datatype) {
    case 2: width = 1; break;
    case 4: width = 2; break;
    case 16: width = 4; break;
    default:
        throw FormatError(FormatErrc::unsupported_dtype,
                          path.string() + ": unsupported NIfTI datatype " + std::to_string(datatype));
    }
    const std::size_t n = d.count();
    if (buf.size() < offset + n * width) throw FormatError(FormatErrc::truncated, path.string() + ": truncated payload");

    std::vector<float> data(n);
    const char* p = buf.data() + offset;
    for (std::size_t i = 0; i < n; ++i) {
        float raw = 0.0f;
        if (datatype == 2) {
            raw = static_cast<float>(static_cast<std::uint8_t>(p[i]));
        } else if (datatype == 4) {
            std::int16_t s;
            std::memcpy(&s, p + 2 * i, 2);
            raw = static_cast<float>(s);
        } else {
            std::memcpy(&raw, p + 4 * i, 4);
        }
        data[i] = slope * raw + inter;
    }
    return Volume3D(d, std::move(data), sp);
}

void write_nifti(const Volume3D& v, const std::filesystem::path& path) {
    if (v.empty()) throw InvalidVolume("cannot write an empty volume");
    auto buf = nifti_header(v.dims(), v.spacing(), 16, 32);
    const auto* p = reinterpret_cast<const char*>(v.values().data());
    buf.insert(buf.end(), p, p + v.size() * sizeof(float));
    spit(path, buf, ends_with(path.string(), ".gz"));
}

void write_nifti(const BinaryMask3D& m, const std::filesystem::path& path, Spacing spacing) {
    auto buf = nifti_header(m.dims(), spacing, 2, 8);
    const auto* p = reinterpret_cast<const char*>(m.bytes().data());
    buf.insert(buf.end(), p, p + m.size());
    spit(path, buf, ends_with(path.string(), ".gz"));
}

bool is_nifti_path(const std::filesystem::path& path) {
    const auto s = path.string();
    return ends_with(s, ".nii") || ends_with(s, ".nii.gz");
}

Volume3D read_volume(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
    return is_nifti_path(path) ? read_nifti(path) : read_rvol(path);
}

void write_volume(const Volume3D& v, const std::filesystem::path& path) {
    if (is_nifti_path(path))
        write_nifti(v, path);
    else
        write_rvol(v, path);
}

void write_mask(const BinaryMask3D& m, const std::filesystem::path& path, Spacing spacing) {
    if (is_nifti_path(path))
        write_nifti(m, path, spacing);
    else
        write_rvol(m, path, spacing);
}

BinaryMask3D read_mask(const std::filesystem::path& path) {
    const Volume3D v = read_volume(path);
    std::vector<std::uint8_t> bits(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) bits[i] = v[i] != 0.0f ? 1 : 0;
    return BinaryMask3D(v.dims(), std::move(bits));
}

} // namespace moodkit::volcore
