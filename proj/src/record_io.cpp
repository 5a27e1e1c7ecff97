#include "slr/record_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace slr {

namespace {

void append_block_names(std::vector<std::string>& out, int points, const char* suffix) {
    for (int i = 0; i < points; ++i) {
        for (const char* axis : {"x", "y", "z"}) {
            out.push_back(std::string(axis) + std::to_string(i) + "_" + suffix);
        }
    }
}

std::vector<std::string> canonical_names() {
    std::vector<std::string> names;
    names.reserve(kRecordColumns);
    append_block_names(names, kHandPoints, "l");
    append_block_names(names, kHandPoints, "r");
    append_block_names(names, kPosePoints, "p");
    names.emplace_back("video_id");
    names.emplace_back("sign_id");
    names.emplace_back("fps");
    return names;
}

double parse_double(const std::string& cell, std::size_t column) {
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) {
        throw Error("non-numeric cell '" + cell + "' in column " + std::to_string(column + 1));
    }
    return v;
}

template <int N>
std::optional<LandmarkBlock<N>> parse_block(const std::vector<std::string>& fields, std::size_t offset) {
    constexpr std::size_t kCells = 3 * N;
    std::size_t filled = 0;
    for (std::size_t i = 0; i < kCells; ++i) {
        if (!fields[offset + i].empty()) ++filled;
    }
    if (filled == 0) return std::nullopt;
    if (filled != kCells) {
        throw Error("partially filled landmark block at column " + std::to_string(offset + 1));
    }
    LandmarkBlock<N> block;
    for (int p = 0; p < N; ++p) {
        const std::size_t c = offset + 3 * static_cast<std::size_t>(p);
        block.points[p] = {parse_double(fields[c], c), parse_double(fields[c + 1], c + 1),
                           parse_double(fields[c + 2], c + 2)};
    }
    if (!block.finite()) throw Error("non-finite coordinate near column " + std::to_string(offset + 1));
    return block;
}

template <int N>
void write_block(std::string& out, const std::optional<LandmarkBlock<N>>& block) {
    for (int p = 0; p < N; ++p) {
        if (block) {
            const Vec3& v = block->points[p];
            out += format_double(v.x);
            out += ',';
            out += format_double(v.y);
            out += ',';
            out += format_double(v.z);
            out += ',';
        } else {
            out += ",,,";
        }
    }
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    q += '"';
    return q;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

const std::string& record_header() {
    static const std::string header = [] {
        std::string h;
        for (const std::string& n : canonical_names()) {
            if (!h.empty()) h += ',';
            h += n;
        }
        return h;
    }();
    return header;
}

ColumnMap ColumnMap::canonical() {
    ColumnMap m;
    m.names_ = canonical_names();
    return m;
}

ColumnMap ColumnMap::from_header(std::string_view header_line) {
    if (!header_line.empty() && header_line.back() == '\r') header_line.remove_suffix(1);
    ColumnMap m;
    m.names_ = split_csv_line(header_line);
    if (m.names_.size() != static_cast<std::size_t>(kRecordColumns)) {
        throw Error("header has " + std::to_string(m.names_.size()) + " columns, expected " +
                    std::to_string(kRecordColumns));
    }
    if (m.names_ != canonical_names()) throw Error("header does not match the canonical record layout");
    return m;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw Error("unterminated quoted cell");
    fields.push_back(std::move(cur));
    return fields;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("cannot format number");
    return std::string(buf, ptr);
}

FrameRecord parse_record(std::string_view row, const ColumnMap& header) {
    if (header.size() != static_cast<std::size_t>(kRecordColumns)) throw Error("bad column map");
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    const std::vector<std::string> fields = split_csv_line(row);
    if (fields.size() != static_cast<std::size_t>(kRecordColumns)) {
        throw Error("column-count mismatch: got " + std::to_string(fields.size()) + ", expected " +
                    std::to_string(kRecordColumns));
    }
    constexpr std::size_t kLeft = 0;
    constexpr std::size_t kRight = 3 * kHandPoints;
    constexpr std::size_t kPose = 6 * kHandPoints;
    constexpr std::size_t kMeta = kPose + 3 * kPosePoints;

    FrameRecord rec;
    rec.left = parse_block<kHandPoints>(fields, kLeft);
    rec.right = parse_block<kHandPoints>(fields, kRight);
    rec.pose = parse_block<kPosePoints>(fields, kPose);
    rec.video_id = fields[kMeta];

    const std::string& sid = fields[kMeta + 1];
    auto [ptr, ec] = std::from_chars(sid.data(), sid.data() + sid.size(), rec.sign_id);
    if (sid.empty() || ec != std::errc{} || ptr != sid.data() + sid.size()) {
        throw Error("invalid sign_id '" + sid + "'");
    }
    if (rec.sign_id < 0) throw Error("sign_id must be non-negative");
    rec.fps = Fps::parse(fields[kMeta + 2]);
    return rec;
}

std::string serialize_record(const FrameRecord& rec) {
    rec.validate();
    std::string out;
    out.reserve(4096);
    write_block(out, rec.left);
    write_block(out, rec.right);
    write_block(out, rec.pose);
    out += quote_if_needed(rec.video_id);
    out += ',';
    out += std::to_string(rec.sign_id);
    out += ',';
    out += rec.fps.str();
    return out;
}

SignRegistry registry_from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) throw Error("registry must be a JSON array");
    SignRegistry reg;
    for (const auto& item : doc) {
        try {
            SignClass s;
            s.sign_id = item.at("sign_id").get<int>();
            s.gloss = item.at("gloss").get<std::string>();
            s.english = item.value("english", std::string{});
            const std::string hand = item.value("handedness", std::string("one"));
            if (hand == "one") {
                s.handedness = Handedness::One;
            } else if (hand == "two") {
                s.handedness = Handedness::Two;
            } else {
                throw Error("handedness must be 'one' or 'two'");
            }
            s.symmetric = item.value("symmetric", false);
            s.handshape_tags = item.value("handshape_tags", std::vector<std::string>{});
            reg.add(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("invalid registry entry: ") + e.what());
        }
    }
    return reg;
}

nlohmann::json registry_to_json(const SignRegistry& registry) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& [id, s] : registry.signs()) {
        doc.push_back({{"sign_id", id},
                       {"gloss", s.gloss},
                       {"english", s.english},
                       {"handedness", s.handedness == Handedness::Two ? "two" : "one"},
                       {"symmetric", s.symmetric},
                       {"handshape_tags", s.handshape_tags}});
    }
    return doc;
}

SignRegistry load_registry(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid registry " + path.string() + ": " + e.what());
    }
    return registry_from_json(doc);
}

void save_registry(const SignRegistry& registry, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << registry_to_json(registry).dump(2) << '\n';
}

std::vector<VideoSequence> group_records(std::vector<FrameRecord> records, const SignRegistry& registry) {
    std::vector<VideoSequence> videos;
    std::unordered_map<std::string, std::size_t> index;
    for (FrameRecord& rec : records) {
        if (!registry.contains(rec.sign_id)) {
            throw Error("unknown sign_id " + std::to_string(rec.sign_id) + " in video '" + rec.video_id + "'");
        }
        auto [it, inserted] = index.emplace(rec.video_id, videos.size());
        if (inserted) {
            VideoSequence v;
            v.video_id = rec.video_id;
            v.fps = rec.fps;
            videos.push_back(std::move(v));
        }
        VideoSequence& v = videos[it->second];
        if (!(v.fps == rec.fps)) throw Error("mixed fps within video '" + v.video_id + "'");
        v.frames.push_back(std::move(rec));
    }
    for (VideoSequence& v : videos) v.sign_id = VideoSequence::dominant_sign(v.frames);
    return videos;
}

Dataset load_dataset(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    std::vector<fs::path> csvs;
    fs::path registry_path;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") csvs.push_back(entry.path());
        }
        std::sort(csvs.begin(), csvs.end());
        if (csvs.empty()) throw Error("empty dataset: no CSV files in " + path.string());
        registry_path = path / "signs.json";
    } else if (fs::is_regular_file(path)) {
        csvs.push_back(path);
        registry_path = path.parent_path() / "signs.json";
    } else {
        throw Error("no such dataset: " + path.string());
    }

    Dataset ds;
    if (fs::exists(registry_path)) {
        ds.registry = load_registry(registry_path);
    } else {
        throw Error("missing sign registry " + registry_path.string());
    }

    std::vector<FrameRecord> records;
    for (const fs::path& csv : csvs) {
        std::ifstream in(csv);
        if (!in) throw Error("cannot open " + csv.string());
        std::string line;
        if (!std::getline(in, line)) continue;
        const ColumnMap columns = ColumnMap::from_header(line);
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r") continue;
            try {
                records.push_back(parse_record(line, columns));
            } catch (const Error& e) {
                throw Error(csv.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }
    ds.videos = group_records(std::move(records), ds.registry);
    return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_registry(dataset.registry, dir / "signs.json");
    std::ofstream out(dir / "records.csv", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "records.csv").string());
    out << record_header() << '\n';
    for (const VideoSequence& v : dataset.videos) {
        for (const FrameRecord& f : v.frames) out << serialize_record(f) << '\n';
    }
}

}  // namespace slr
