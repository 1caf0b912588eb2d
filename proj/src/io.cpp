#include "tvpursuit/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace tvp {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Error parse_error(const std::string& key, const std::string& value, const char* what) {
  return Error(ErrorKind::Parse, "key '" + key + "': '" + value + "' is not " + what);
}

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::uint64_t bits = 0;
  static_assert(sizeof(T) <= sizeof(bits));
  std::memcpy(&bits, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw Error(ErrorKind::Io, "container truncated");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& os, std::string kind, std::vector<std::string> columns,
                     const std::vector<std::string>& comments)
    : os_(os), columns_(std::move(columns)) {
  os_ << "# schema: tvpursuit/" << kind << "/v1\n";
  os_ << "# generated_at=" << utc_timestamp() << "\n";
  for (const auto& c : comments) os_ << "# " << c << "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) os_ << (i ? "," : "") << columns_[i];
  os_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size())
    throw Error(ErrorKind::ShapeMismatch, "csv row has " + std::to_string(cells.size()) + " cells, expected " +
                                              std::to_string(columns_.size()));
  for (const auto& c : cells)
    if (c.find_first_of(",\n") != std::string::npos) throw Error(ErrorKind::Parse, "csv cell contains a separator: " + c);
  for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
  os_ << "\n";
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorKind::Parse, "csv has no column " + std::string(name));
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(trim(std::string_view(line).substr(1)));
      continue;
    }
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) throw Error(ErrorKind::Parse, "ragged csv row: " + line);
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    if (body.find('=') == std::string::npos)
      throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(body);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void KeyValueConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw Error(ErrorKind::Parse, "expected key=value: " + std::string(assignment));
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw Error(ErrorKind::Parse, "empty key in: " + std::string(assignment));
  values_[key] = trim(assignment.substr(eq + 1));
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  mark(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  mark(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double v = 0.0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw parse_error(key, s, "a finite number");
  return v;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  mark(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  long long v = 0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw parse_error(key, s, "an integer");
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  mark(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto& s = it->second;
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw parse_error(key, s, "a boolean");
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key, const std::vector<int>& fallback) const {
  mark(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  auto to_int = [&](const std::string& s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw parse_error(key, it->second, "an integer list");
    return v;
  };
  std::vector<int> out;
  for (const auto& item : split(it->second, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(to_int(parts[0]));
    } else if (parts.size() == 2 || parts.size() == 3) {
      const int lo = to_int(parts[0]);
      const int hi = to_int(parts[1]);
      const int step = parts.size() == 3 ? to_int(parts[2]) : 1;
      if (step <= 0 || hi < lo) throw parse_error(key, it->second, "a valid range");
      for (int v = lo; v <= hi; v += step) out.push_back(v);
    } else {
      throw parse_error(key, it->second, "an integer list");
    }
  }
  return out;
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key,
                                                  const std::vector<std::string>& fallback) const {
  mark(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<std::string> out;
  for (auto& item : split(it->second, ','))
    if (!item.empty()) out.push_back(std::move(item));
  return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (read_.count(k) == 0) out.push_back(k);
  return out;
}

const Matrix& Container::get(std::string_view name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a.data;
  throw Error(ErrorKind::Parse, "container has no array " + std::string(name));
}

void write_container(std::ostream& os, const Container& c) {
  nlohmann::json header;
  header["meta"] = nlohmann::json::parse(c.meta_json);
  header["arrays"] = nlohmann::json::array();
  for (const auto& a : c.arrays) header["arrays"].push_back({{"name", a.name}, {"rows", a.data.rows()}, {"cols", a.data.cols()}});
  const std::string text = header.dump();
  os.write("TVPC", 4);
  put_le<std::uint32_t>(os, kContainerVersion);
  put_le<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : c.arrays)
    for (Eigen::Index i = 0; i < a.data.size(); ++i) put_le<double>(os, a.data.data()[i]);
  if (!os) throw Error(ErrorKind::Io, "container write failed");
}

Container read_container(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "TVPC") throw Error(ErrorKind::Parse, "bad container magic");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kContainerVersion) throw Error(ErrorKind::Parse, "unsupported container version " + std::to_string(version));
  const auto len = get_le<std::uint64_t>(is);
  if (len > (1ull << 30)) throw Error(ErrorKind::Parse, "container header too large");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw Error(ErrorKind::Io, "container truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("container header: ") + e.what());
  }
  Container c;
  c.meta_json = header.value("meta", nlohmann::json::object()).dump();
  for (const auto& a : header.at("arrays")) {
    NamedArray arr;
    arr.name = a.at("name").get<std::string>();
    const auto rows = a.at("rows").get<Eigen::Index>();
    const auto cols = a.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw Error(ErrorKind::Parse, "negative array shape");
    arr.data.resize(rows, cols);
    for (Eigen::Index i = 0; i < arr.data.size(); ++i) arr.data.data()[i] = get_le<double>(is);
    c.arrays.push_back(std::move(arr));
  }
  return c;
}

void save_container(const std::string& path, const Container& c) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
  write_container(f, c);
}

Container load_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_container(f);
}

}  // namespace tvp
