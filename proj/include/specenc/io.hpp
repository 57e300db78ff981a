#pragma once

#include "specenc/core.hpp"
#include "specenc/learner.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace specenc::io
{
    namespace fs = std::filesystem;

    // Shortest representation that parses back to the same double.
    inline std::string format_double(double v)
    {
        if (std::isnan(v))
            return "nan";
        char buf[32];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, end);
    }

    inline double parse_double(std::string_view text, const std::string &where)
    {
        while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
            text.remove_prefix(1);
        while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
            text.remove_suffix(1);
        if (text == "nan")
            return std::nan("");
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || ptr != text.data() + text.size())
            throw ParseError(where + ": invalid number '" + std::string(text) + "'");
        return v;
    }

    inline std::size_t parse_count(std::string_view text, const std::string &where)
    {
        const double v = parse_double(text, where);
        if (!(v >= 0.0) || v != std::floor(v) || v > 1e12)
            throw ParseError(where + ": expected a non-negative integer, got '" + std::string(text) + "'");
        return static_cast<std::size_t>(v);
    }

    inline std::vector<std::string_view> split(std::string_view line, char sep)
    {
        std::vector<std::string_view> out;
        std::size_t start = 0;
        while (true)
        {
            const std::size_t pos = line.find(sep, start);
            out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
            if (pos == std::string_view::npos)
                break;
            start = pos + 1;
        }
        return out;
    }

    inline std::string read_file(const fs::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw MissingFileError({path.string()});
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    // Writes to a sibling temporary and renames it into place, so readers never see a partial file.
    inline void write_file_atomic(const fs::path &path, std::string_view content)
    {
        if (path.has_parent_path())
            fs::create_directories(path.parent_path());
        fs::path tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw std::runtime_error("cannot open " + tmp.string() + " for writing");
            out.write(content.data(), static_cast<std::streamsize>(content.size()));
            if (!out)
                throw std::runtime_error("write failed: " + tmp.string());
        }
        fs::rename(tmp, path);
    }

    inline std::vector<std::string> lines_of(const std::string &text)
    {
        std::vector<std::string> lines;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line))
        {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            lines.push_back(line);
        }
        return lines;
    }

    // ---- grids as CSV: "rows,cols" header, the two sizes, then one line per row ----

    inline std::string grid_to_csv(const PixelGrid &g)
    {
        std::string out = "rows,cols\n" + std::to_string(g.rows()) + "," + std::to_string(g.cols()) + "\n";
        for (std::size_t r = 0; r < g.rows(); ++r)
        {
            for (std::size_t c = 0; c < g.cols(); ++c)
            {
                if (c)
                    out += ',';
                out += format_double(g(r, c));
            }
            out += '\n';
        }
        return out;
    }

    inline PixelGrid grid_from_csv(const std::string &text, const std::string &name)
    {
        const auto lines = lines_of(text);
        if (lines.size() < 2 || lines[0] != "rows,cols")
            throw ParseError(name + ":1: expected header 'rows,cols'");
        const auto dims = split(lines[1], ',');
        if (dims.size() != 2)
            throw ParseError(name + ":2: expected 'rows,cols' sizes");
        const std::size_t rows = parse_count(dims[0], name + ":2");
        const std::size_t cols = parse_count(dims[1], name + ":2");
        if (rows == 0 || cols == 0)
            throw ParseError(name + ":2: empty grid");
        if (lines.size() < rows + 2)
            throw ParseError(name + ": expected " + std::to_string(rows) + " data rows");
        std::vector<double> values;
        values.reserve(rows * cols);
        for (std::size_t r = 0; r < rows; ++r)
        {
            const std::string where = name + ":" + std::to_string(r + 3);
            const auto cells = split(lines[r + 2], ',');
            if (cells.size() != cols)
                throw ParseError(where + ": expected " + std::to_string(cols) + " values, got " +
                                 std::to_string(cells.size()));
            for (auto cell : cells)
            {
                const double v = parse_double(cell, where);
                if (!std::isfinite(v))
                    throw ParseError(where + ": non-finite value");
                values.push_back(v);
            }
        }
        return PixelGrid(rows, cols, std::move(values));
    }

    // ---- ASCII PGM (P2, maxval 65535) with the linear level mapping recorded in a comment ----

    struct PgmRange
    {
        double min = 0.0;
        double max = 65535.0;
    };

    inline constexpr std::uint32_t pgm_maxval = 65535;

    // Values map linearly from [range.min, range.max] to levels [0, 65535] and are rounded;
    // integers in [0, 65535] survive exactly with the default range.
    inline std::string grid_to_pgm(const PixelGrid &g, PgmRange range)
    {
        std::string out = "P2\n# specenc linear min=" + format_double(range.min) + " max=" +
                          format_double(range.max) + " value=min+level*(max-min)/65535\n" +
                          std::to_string(g.cols()) + " " + std::to_string(g.rows()) + "\n" +
                          std::to_string(pgm_maxval) + "\n";
        const double span = range.max - range.min;
        for (std::size_t r = 0; r < g.rows(); ++r)
        {
            for (std::size_t c = 0; c < g.cols(); ++c)
            {
                double t = span > 0.0 ? (g(r, c) - range.min) / span : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                if (c)
                    out += ' ';
                out += std::to_string(static_cast<std::uint32_t>(std::lround(t * pgm_maxval)));
            }
            out += '\n';
        }
        return out;
    }

    // Uses the grid's own min and max as the mapping range.
    inline std::string grid_to_pgm(const PixelGrid &g) { return grid_to_pgm(g, PgmRange{g.min(), g.max()}); }

    // Without the mapping comment the raw levels are returned.
    inline PixelGrid grid_from_pgm(const std::string &text, const std::string &name)
    {
        std::optional<PgmRange> range;
        std::vector<std::string> tokens;
        for (const auto &line : lines_of(text))
        {
            if (!line.empty() && line[0] == '#')
            {
                const auto min_at = line.find("min=");
                const auto max_at = line.find("max=");
                if (line.rfind("# specenc linear", 0) == 0 && min_at != std::string::npos &&
                    max_at != std::string::npos)
                    range = PgmRange{parse_double(split(line.substr(min_at + 4), ' ')[0], name),
                                     parse_double(split(line.substr(max_at + 4), ' ')[0], name)};
                continue;
            }
            std::istringstream ls(line);
            std::string tok;
            while (ls >> tok)
                tokens.push_back(tok);
        }
        if (tokens.size() < 4 || tokens[0] != "P2")
            throw ParseError(name + ": not an ASCII PGM (P2) file");
        const std::size_t cols = parse_count(tokens[1], name + ": width");
        const std::size_t rows = parse_count(tokens[2], name + ": height");
        const std::size_t maxval = parse_count(tokens[3], name + ": maxval");
        if (rows == 0 || cols == 0 || maxval == 0)
            throw ParseError(name + ": empty image or zero maxval");
        if (tokens.size() != 4 + rows * cols)
            throw ParseError(name + ": expected " + std::to_string(rows * cols) + " pixel values, got " +
                             std::to_string(tokens.size() - 4));
        std::vector<double> values(rows * cols);
        for (std::size_t i = 0; i < values.size(); ++i)
        {
            const std::size_t level = parse_count(tokens[4 + i], name + ": pixel " + std::to_string(i));
            if (level > maxval)
                throw ParseError(name + ": pixel " + std::to_string(i) + " exceeds maxval");
            values[i] = range ? range->min + static_cast<double>(level) * (range->max - range->min) /
                                                 static_cast<double>(maxval)
                              : static_cast<double>(level);
        }
        return PixelGrid(rows, cols, std::move(values));
    }

    inline PixelGrid read_grid(const fs::path &path)
    {
        const std::string text = read_file(path);
        if (path.extension() == ".pgm")
            return grid_from_pgm(text, path.string());
        return grid_from_csv(text, path.string());
    }

    inline void write_grid_csv(const fs::path &path, const PixelGrid &g) { write_file_atomic(path, grid_to_csv(g)); }

    // ---- point clouds: "x,y,z" header, one point per line, meters ----

    inline std::string cloud_to_csv(const PointCloud &cloud)
    {
        std::string out = "x,y,z\n";
        for (const Point3 &p : cloud.points())
            out += format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.z) + "\n";
        return out;
    }

    inline PointCloud cloud_from_csv(const std::string &text, const std::string &name)
    {
        const auto lines = lines_of(text);
        if (lines.empty() || lines[0] != "x,y,z")
            throw ParseError(name + ":1: expected header 'x,y,z'");
        std::vector<Point3> pts;
        for (std::size_t i = 1; i < lines.size(); ++i)
        {
            if (lines[i].empty())
                continue;
            const std::string where = name + ":" + std::to_string(i + 1);
            const auto cells = split(lines[i], ',');
            if (cells.size() != 3)
                throw ParseError(where + ": expected 3 coordinates");
            pts.push_back({parse_double(cells[0], where), parse_double(cells[1], where),
                           parse_double(cells[2], where)});
        }
        return PointCloud(std::move(pts));
    }

    inline PointCloud read_cloud(const fs::path &path) { return cloud_from_csv(read_file(path), path.string()); }

    // True when the file starts with the point-cloud header.
    inline bool is_cloud_file(const fs::path &path)
    {
        std::ifstream in(path);
        std::string first;
        std::getline(in, first);
        if (!first.empty() && first.back() == '\r')
            first.pop_back();
        return first == "x,y,z";
    }

    // ---- checkpoints: text table of names and shapes, then raw little-endian float64 ----
    //
    //   specenc-checkpoint 1
    //   tensors <count>
    //   <name> <ndim> <dim0> ... <dimN>
    //   ...
    //   data
    //   <raw bytes, tensors in table order>

    inline std::string checkpoint_bytes(const std::vector<NamedTensor> &tensors)
    {
        std::string out = "specenc-checkpoint 1\ntensors " + std::to_string(tensors.size()) + "\n";
        for (const auto &t : tensors)
        {
            out += t.name + " " + std::to_string(t.shape.size());
            for (std::size_t d : t.shape)
                out += " " + std::to_string(d);
            out += "\n";
        }
        out += "data\n";
        for (const auto &t : tensors)
            for (double v : t.values)
            {
                std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
                for (int b = 0; b < 8; ++b)
                    out += static_cast<char>((bits >> (8 * b)) & 0xffu);
            }
        return out;
    }

    inline std::vector<NamedTensor> checkpoint_from_bytes(const std::string &bytes, const std::string &name)
    {
        std::size_t pos = 0;
        std::size_t line_no = 0;
        const auto next_line = [&]() {
            const std::size_t end = bytes.find('\n', pos);
            if (end == std::string::npos)
                throw ParseError(name + ": truncated header");
            std::string line = bytes.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            return line;
        };
        if (next_line() != "specenc-checkpoint 1")
            throw ParseError(name + ":1: not a specenc checkpoint");
        const std::string count_line = next_line();
        if (count_line.rfind("tensors ", 0) != 0)
            throw ParseError(name + ":2: expected 'tensors <count>'");
        const std::size_t count = parse_count(count_line.substr(8), name + ":2");

        std::vector<NamedTensor> tensors(count);
        std::size_t total = 0;
        for (auto &t : tensors)
        {
            const std::string line = next_line();
            const std::string where = name + ":" + std::to_string(line_no);
            std::istringstream ls(line);
            std::size_t ndim = 0;
            if (!(ls >> t.name >> ndim))
                throw ParseError(where + ": expected '<name> <ndim> <dims...>'");
            std::size_t n = 1;
            for (std::size_t d = 0; d < ndim; ++d)
            {
                std::size_t dim = 0;
                if (!(ls >> dim))
                    throw ParseError(where + ": missing dimension " + std::to_string(d));
                t.shape.push_back(dim);
                n *= dim;
            }
            t.values.resize(n);
            total += n;
        }
        if (next_line() != "data")
            throw ParseError(name + ":" + std::to_string(line_no) + ": expected 'data'");
        if (bytes.size() - pos != total * 8)
            throw ParseError(name + ": expected " + std::to_string(total * 8) + " data bytes, found " +
                             std::to_string(bytes.size() - pos));
        for (auto &t : tensors)
            for (double &v : t.values)
            {
                std::uint64_t bits = 0;
                for (int b = 0; b < 8; ++b)
                    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * b);
                v = std::bit_cast<double>(bits);
            }
        return tensors;
    }

    inline void write_checkpoint(const fs::path &path, const std::vector<NamedTensor> &tensors)
    {
        write_file_atomic(path, checkpoint_bytes(tensors));
    }

    inline std::vector<NamedTensor> read_checkpoint(const fs::path &path)
    {
        return checkpoint_from_bytes(read_file(path), path.string());
    }
}
