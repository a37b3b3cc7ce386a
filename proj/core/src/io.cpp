#include "trapwave/io.hpp"

#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trapwave/errors.hpp"

namespace trapwave {

namespace {

constexpr char kCacheMagic[8] = {'T', 'R', 'A', 'P', 'W', 'A', '1', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    return out;
}

double parse_double(const std::string& text, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
        if (pos != text.size())
            throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("failed to parse ") + what + ": '" + text + "'");
    }
}

// '# key = value' header line, or empty
bool parse_header_line(const std::string& line, std::string& key, std::string& value) {
    if (line.empty() || line[0] != '#')
        return false;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
        return false;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t#");
        const auto b = s.find_last_not_of(" \t\r");
        if (a == std::string::npos)
            return std::string();
        return s.substr(a, b - a + 1);
    };
    key = trim(line.substr(0, eq));
    value = trim(line.substr(eq + 1));
    return !key.empty();
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open file for digest: " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const auto got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in)
            break;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, value);
    return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const auto parent = path.parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open for writing: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw IoError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("rename failed: " + tmp + " -> " + path.string() + ": " +
                      ec.message());
}

void write_matrix_cache(const std::filesystem::path& path, const PotentialMatrix& a) {
    std::string blob;
    const auto rows = static_cast<std::int64_t>(a.entries.rows());
    const auto cols = static_cast<std::int64_t>(a.entries.cols());
    blob.reserve(64 + static_cast<std::size_t>(rows * cols) * sizeof(double));
    auto put = [&](const void* p, std::size_t n) {
        blob.append(static_cast<const char*>(p), n);
    };
    put(kCacheMagic, sizeof(kCacheMagic));
    put(&kCacheVersion, sizeof(kCacheVersion));
    put(&a.config_hash, sizeof(a.config_hash));
    put(&rows, sizeof(rows));
    put(&cols, sizeof(cols));
    put(&a.grid.start, sizeof(double));
    put(&a.grid.step, sizeof(double));
    for (std::int64_t j = 0; j < rows; ++j)
        for (std::int64_t i = 0; i < cols; ++i) {
            const double v = a.entries(j, i);
            put(&v, sizeof(double));
        }
    atomic_write(path, blob);
}

PotentialMatrix read_matrix_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open matrix cache: " + path.string());
    char magic[8];
    std::uint32_t version = 0;
    PotentialMatrix a;
    std::int64_t rows = 0, cols = 0;
    auto get = [&](void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!in)
            throw IoError("truncated matrix cache: " + path.string());
    };
    get(magic, sizeof(magic));
    if (std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
        throw IoError("not a trapwave matrix cache: " + path.string());
    get(&version, sizeof(version));
    if (version != kCacheVersion)
        throw IoError("unsupported matrix cache version in " + path.string());
    get(&a.config_hash, sizeof(a.config_hash));
    get(&rows, sizeof(rows));
    get(&cols, sizeof(cols));
    if (rows < 2 || cols < 1 || rows > (1 << 24) || cols > (1 << 20))
        throw IoError("implausible matrix cache dimensions in " + path.string());
    get(&a.grid.start, sizeof(double));
    get(&a.grid.step, sizeof(double));
    a.grid.count = rows;
    a.entries.resize(rows, cols);
    for (std::int64_t j = 0; j < rows; ++j)
        for (std::int64_t i = 0; i < cols; ++i) {
            double v;
            get(&v, sizeof(v));
            a.entries(j, i) = v;
        }
    return a;
}

void write_waveform_csv(const std::filesystem::path& path, const Waveform& w) {
    std::ostringstream os;
    const auto n = w.frames.empty() ? 0 : w.frames.front().voltages.size();
    os << "# trapwave waveform v1\n";
    os << "# config_hash = " << hex64(w.config_hash) << "\n";
    os << "# species_mass_kg = " << fmt17(w.species.mass) << "\n";
    os << "# species_charge_C = " << fmt17(w.species.charge) << "\n";
    os << "# frame_spacing_m = " << fmt17(w.frame_spacing) << "\n";
    os << "# frame_period_s = " << fmt17(w.frame_period) << "\n";
    os << "# window_width_m = " << fmt17(w.window_width) << "\n";
    os << "# v_max_V = " << fmt17(w.v_max) << "\n";
    os << "# dac_bits = " << w.dac_bits << "\n";
    os << "# electrodes = " << n << "\n";
    os << "index,time_s,z_m,omega_rad_s,alpha,residual_V";
    for (Eigen::Index i = 1; i <= n; ++i)
        os << ",v" << i;
    os << "\n";
    for (std::size_t k = 0; k < w.frames.size(); ++k) {
        const auto& f = w.frames[k];
        os << k << "," << fmt17(static_cast<double>(k) * w.frame_period) << ","
           << fmt17(f.z_target) << "," << fmt17(f.omega_target) << ","
           << fmt17(f.alpha) << "," << fmt17(f.residual_norm);
        for (Eigen::Index i = 0; i < f.voltages.size(); ++i)
            os << "," << fmt17(f.voltages[i]);
        os << "\n";
    }
    atomic_write(path, os.str());
}

Waveform read_waveform_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open waveform: " + path.string());
    Waveform w;
    Eigen::Index electrodes = 0;
    std::string line;
    bool seen_columns = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::string key, value;
        if (parse_header_line(line, key, value)) {
            if (key == "config_hash")
                w.config_hash = std::stoull(value, nullptr, 16);
            else if (key == "species_mass_kg")
                w.species.mass = parse_double(value, "species_mass_kg");
            else if (key == "species_charge_C")
                w.species.charge = parse_double(value, "species_charge_C");
            else if (key == "frame_spacing_m")
                w.frame_spacing = parse_double(value, "frame_spacing_m");
            else if (key == "frame_period_s")
                w.frame_period = parse_double(value, "frame_period_s");
            else if (key == "window_width_m")
                w.window_width = parse_double(value, "window_width_m");
            else if (key == "v_max_V")
                w.v_max = parse_double(value, "v_max_V");
            else if (key == "dac_bits")
                w.dac_bits = std::stoi(value);
            else if (key == "electrodes")
                electrodes = std::stoll(value);
            continue;
        }
        if (line[0] == '#')
            continue;
        if (!seen_columns) {
            seen_columns = true;  // column header row
            continue;
        }
        const auto cells = split(line, ',');
        if (static_cast<Eigen::Index>(cells.size()) != 6 + electrodes)
            throw IoError("waveform row has " + std::to_string(cells.size()) +
                          " cells, expected " + std::to_string(6 + electrodes));
        WaveformFrame f;
        f.z_target = parse_double(cells[2], "z_m");
        f.omega_target = parse_double(cells[3], "omega_rad_s");
        f.alpha = parse_double(cells[4], "alpha");
        f.residual_norm = parse_double(cells[5], "residual_V");
        f.voltages.resize(electrodes);
        for (Eigen::Index i = 0; i < electrodes; ++i)
            f.voltages[i] = parse_double(cells[static_cast<std::size_t>(6 + i)], "v");
        w.frames.push_back(std::move(f));
    }
    if (w.frames.empty())
        throw IoError("waveform file has no frames: " + path.string());
    return w;
}

void write_report_csv(const std::filesystem::path& path, const ProbeReport& report,
                      std::uint64_t config_hash, const std::string& method) {
    std::ostringstream os;
    os << "# trapwave probe report v1\n";
    os << "# config_hash = " << hex64(config_hash) << "\n";
    os << "# method = " << method << "\n";
    os << "# mean_rel_dev_curvature = " << fmt17(report.summary.mean_dev_curvature)
       << "\n";
    os << "# max_rel_dev_curvature = " << fmt17(report.summary.max_dev_curvature)
       << "\n";
    os << "# mean_rel_dev_dynamics = " << fmt17(report.summary.mean_dev_dynamics)
       << "\n";
    os << "# max_rel_dev_dynamics = " << fmt17(report.summary.max_dev_dynamics) << "\n";
    os << "# failed_rows = " << report.summary.failed_rows << "\n";
    os << "z_m,omega_target_rad_s,omega_curvature_rad_s,omega_dynamics_rad_s,"
          "rel_dev_curvature,rel_dev_dynamics,sigma_rel,status\n";
    for (const auto& row : report.rows) {
        std::string status = row.ok ? "ok" : row.error;
        for (char& c : status)
            if (c == ',' || c == '\n')
                c = ';';
        os << fmt17(row.z) << "," << fmt17(row.omega_target) << ","
           << fmt17(row.omega_curvature) << "," << fmt17(row.omega_dynamics) << ","
           << fmt17(row.dev_curvature) << "," << fmt17(row.dev_dynamics) << ","
           << fmt17(row.sigma_rel) << "," << status << "\n";
    }
    atomic_write(path, os.str());
}

void write_voltages_csv(const std::filesystem::path& path, const VoltageSet& v) {
    std::ostringstream os;
    os << "electrode,volts\n";
    for (Eigen::Index i = 0; i < v.size(); ++i)
        os << (i + 1) << "," << fmt17(v[i]) << "\n";
    atomic_write(path, os.str());
}

VoltageSet read_voltages_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open voltage set: " + path.string());
    std::vector<double> values;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        if (first) {
            first = false;
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != 2)
            throw IoError("voltage row needs 2 cells: " + line);
        values.push_back(parse_double(cells[1], "volts"));
    }
    VoltageSet v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = values[i];
    return v;
}

void write_target_csv(const std::filesystem::path& path, const Grid& grid,
                      const TargetPotential& target) {
    std::ostringstream os;
    os << "z_m,phi_V\n";
    for (Eigen::Index r = 0; r < target.window.count; ++r)
        os << fmt17(grid.z(target.window.first + r)) << "," << fmt17(target.values[r])
           << "\n";
    atomic_write(path, os.str());
}

TargetPotential read_target_csv(const std::filesystem::path& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open target potential: " + path.string());
    std::vector<std::pair<double, double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        if (first) {
            first = false;
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != 2)
            throw IoError("target row needs 2 cells: " + line);
        rows.emplace_back(parse_double(cells[0], "z_m"),
                          parse_double(cells[1], "phi_V"));
    }
    if (rows.empty())
        throw IoError("target potential file is empty: " + path.string());

    TargetPotential target;
    target.window.first = grid.nearest_index(rows.front().first);
    target.window.count = static_cast<Eigen::Index>(rows.size());
    if (target.window.first + target.window.count > grid.count)
        throw IoError("target rows run past the grid");
    target.values.resize(target.window.count);
    for (Eigen::Index r = 0; r < target.window.count; ++r) {
        const auto& [z, phi] = rows[static_cast<std::size_t>(r)];
        const double z_grid = grid.z(target.window.first + r);
        if (std::abs(z - z_grid) > 1e-6 * grid.step + 1e-15)
            throw IoError("target row z = " + fmt17(z) +
                          " does not sit on the matrix grid (expected " +
                          fmt17(z_grid) + ")");
        target.values[r] = phi;
    }
    return target;
}

void write_dac_csv(const std::filesystem::path& path, const Waveform& w) {
    std::ostringstream os;
    const auto n = w.frames.empty() ? 0 : w.frames.front().voltages.size();
    const DacFrame probe_frame =
        w.frames.empty() ? DacFrame{}
                         : quantize(w.frames.front().voltages, w.dac_bits, w.v_max);
    os << "# trapwave dac export v1\n";
    os << "# config_hash = " << hex64(w.config_hash) << "\n";
    os << "# dac_bits = " << w.dac_bits << "\n";
    os << "# v_max_V = " << fmt17(w.v_max) << "\n";
    os << "# lsb_V = " << fmt17(probe_frame.lsb) << "\n";
    os << "# frame_period_s = " << fmt17(w.frame_period) << "\n";
    os << "index,time_s,z_m";
    for (Eigen::Index i = 1; i <= n; ++i)
        os << ",code" << i;
    os << "\n";
    for (std::size_t k = 0; k < w.frames.size(); ++k) {
        const auto& f = w.frames[k];
        const DacFrame d = quantize(f.voltages, w.dac_bits, w.v_max);
        os << k << "," << fmt17(static_cast<double>(k) * w.frame_period) << ","
           << fmt17(f.z_target);
        for (const auto code : d.codes)
            os << "," << code;
        os << "\n";
    }
    atomic_write(path, os.str());
}

void write_manifest(const std::filesystem::path& primary_output,
                    const RunManifest& manifest) {
    nlohmann::json j;
    j["tool"] = "trap";
    j["version"] = tool_version;
    j["command"] = manifest.command;
    j["created_utc"] = manifest.created_utc;
    j["config_hash"] = hex64(manifest.config_hash);
    auto files = [](const std::vector<std::pair<std::string, std::uint64_t>>& list) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [p, digest] : list)
            arr.push_back({{"path", p}, {"digest", hex64(digest)}});
        return arr;
    };
    j["inputs"] = files(manifest.inputs);
    j["outputs"] = files(manifest.outputs);
    const auto path = primary_output.string() + ".manifest.json";
    atomic_write(path, j.dump(2) + "\n");
}

}  // namespace trapwave
