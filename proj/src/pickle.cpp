#include "meguide/pickle.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <unordered_map>

#include "meguide/errors.hpp"

namespace meguide::pickle {

bool Value::is_global(std::string_view mod_suffix, std::string_view nm) const {
  if (kind != Kind::global || name != nm) return false;
  return module.size() >= mod_suffix.size() &&
         module.compare(module.size() - mod_suffix.size(), mod_suffix.size(), mod_suffix) == 0;
}

ValuePtr Value::get(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k && (k->kind == Kind::str || k->kind == Kind::bytes) && k->text == key) return v;
  }
  return nullptr;
}

namespace {

using Kind = Value::Kind;

ValuePtr make(Kind k) {
  auto v = std::make_shared<Value>();
  v->kind = k;
  return v;
}

ValuePtr make_int(std::int64_t i) {
  auto v = make(Kind::integer);
  v->integer = i;
  return v;
}

ValuePtr make_text(Kind k, std::string s) {
  auto v = make(k);
  v->text = std::move(s);
  return v;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Unpickler {
 public:
  Unpickler(std::string_view data, std::string source) : d_(data), src_(std::move(source)) {}

  ValuePtr run() {
    while (true) {
      const auto op = static_cast<unsigned char>(byte());
      switch (op) {
        case 0x80: byte(); break;                    // PROTO
        case 0x95: take(8); break;                   // FRAME
        case '.': return pop();                      // STOP
        case '(': marks_.push_back(stack_.size()); break;
        case '0': pop(); break;
        case '1': pop_mark(); break;
        case '2': push(top()); break;
        case 'N': push(make(Kind::none)); break;
        case 0x88: push_bool(true); break;
        case 0x89: push_bool(false); break;
        case 'I': {
          const auto s = line();
          if (s == "01") push_bool(true);
          else if (s == "00") push_bool(false);
          else push(make_int(parse_int(s)));
          break;
        }
        case 'J': push(make_int(static_cast<std::int32_t>(le_uint(4)))); break;
        case 'K': push(make_int(static_cast<std::int64_t>(le_uint(1)))); break;
        case 'M': push(make_int(static_cast<std::int64_t>(le_uint(2)))); break;
        case 'L': {
          auto s = line();
          if (!s.empty() && s.back() == 'L') s.pop_back();
          push(make_int(parse_int(s)));
          break;
        }
        case 0x8a: push(make_int(long_bytes(le_uint(1)))); break;
        case 0x8b: push(make_int(long_bytes(le_uint(4)))); break;
        case 'F': {
          auto v = make(Kind::floating);
          const auto s = line();
          v->floating = std::strtod(s.c_str(), nullptr);
          push(v);
          break;
        }
        case 'G': {
          auto bits = be_uint(8);
          auto v = make(Kind::floating);
          std::memcpy(&v->floating, &bits, 8);
          push(v);
          break;
        }
        case 'S': push(make_text(Kind::bytes, unquote(line()))); break;
        case 'T': push(make_text(Kind::bytes, std::string(take(le_uint(4))))); break;
        case 'U': push(make_text(Kind::bytes, std::string(take(le_uint(1))))); break;
        case 'B': push(make_text(Kind::bytes, std::string(take(le_uint(4))))); break;
        case 'C': push(make_text(Kind::bytes, std::string(take(le_uint(1))))); break;
        case 0x8e:
        case 0x96: push(make_text(Kind::bytes, std::string(take(le_uint(8))))); break;
        case 'V': push(make_text(Kind::str, raw_unicode_escape(line()))); break;
        case 'X': push(make_text(Kind::str, std::string(take(le_uint(4))))); break;
        case 0x8c: push(make_text(Kind::str, std::string(take(le_uint(1))))); break;
        case 0x8d: push(make_text(Kind::str, std::string(take(le_uint(8))))); break;
        case ')': push(make(Kind::tuple)); break;
        case 't': push(sequence(Kind::tuple, pop_mark())); break;
        case 0x85: tuple_n(1); break;
        case 0x86: tuple_n(2); break;
        case 0x87: tuple_n(3); break;
        case ']': push(make(Kind::list)); break;
        case 'l': push(sequence(Kind::list, pop_mark())); break;
        case 'a': {
          auto v = pop();
          append_to(top(), {v});
          break;
        }
        case 'e': {
          auto items = pop_mark();
          append_to(top(), items);
          break;
        }
        case '}': push(make(Kind::dict)); break;
        case 'd': {
          auto d = make(Kind::dict);
          set_items(d, pop_mark());
          push(d);
          break;
        }
        case 's': {
          auto v = pop();
          auto k = pop();
          set_items(top(), {k, v});
          break;
        }
        case 'u': {
          auto items = pop_mark();
          set_items(top(), items);
          break;
        }
        case 0x8f: push(make(Kind::set)); break;
        case 0x90: {
          auto items = pop_mark();
          auto& s = top();
          s->items.insert(s->items.end(), items.begin(), items.end());
          break;
        }
        case 0x91: push(sequence(Kind::set, pop_mark())); break;
        case 'g': push(memo_get(static_cast<std::uint32_t>(parse_int(line())))); break;
        case 'h': push(memo_get(static_cast<std::uint32_t>(le_uint(1)))); break;
        case 'j': push(memo_get(static_cast<std::uint32_t>(le_uint(4)))); break;
        case 'p': memo_[static_cast<std::uint32_t>(parse_int(line()))] = top(); break;
        case 'q': memo_[static_cast<std::uint32_t>(le_uint(1))] = top(); break;
        case 'r': memo_[static_cast<std::uint32_t>(le_uint(4))] = top(); break;
        case 0x94: {
          const auto id = static_cast<std::uint32_t>(memo_.size());
          memo_[id] = top();
          break;
        }
        case 'c': {
          const auto mod = line();
          const auto nm = line();
          push(global(mod, nm));
          break;
        }
        case 0x93: {
          auto nm = pop();
          auto mod = pop();
          push(global(mod->text, nm->text));
          break;
        }
        case 'R': {
          auto args = pop();
          auto fn = pop();
          push(call(fn, args));
          break;
        }
        case 0x81: {
          auto args = pop();
          auto cls = pop();
          push(call(cls, args));
          break;
        }
        case 0x92: {
          pop();  // kwargs
          auto args = pop();
          auto cls = pop();
          push(call(cls, args));
          break;
        }
        case 'i': {
          const auto mod = line();
          const auto nm = line();
          push(call(global(mod, nm), sequence(Kind::tuple, pop_mark())));
          break;
        }
        case 'o': {
          auto items = pop_mark();
          if (items.empty()) fail("OBJ without class");
          auto cls = items.front();
          items.erase(items.begin());
          push(call(cls, sequence(Kind::tuple, items)));
          break;
        }
        case 'b': {
          auto state = pop();
          auto& obj = top();
          if (obj->kind != Kind::object) fail("BUILD on a non-object");
          obj->state = state;
          break;
        }
        default:
          fail("unsupported pickle opcode 0x" + hex(op));
      }
    }
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConversionError(src_ + ": " + what + " at byte " + std::to_string(pos_));
  }

  static std::string hex(unsigned v) {
    const char* digits = "0123456789abcdef";
    return {digits[(v >> 4) & 0xF], digits[v & 0xF]};
  }

  char byte() {
    if (pos_ >= d_.size()) fail("unexpected end of pickle");
    return d_[pos_++];
  }

  std::string_view take(std::uint64_t n) {
    if (n > d_.size() - pos_) fail("truncated pickle");
    auto s = d_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint64_t le_uint(int n) {
    const auto s = take(n);
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }

  std::uint64_t be_uint(int n) {
    const auto s = take(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }

  std::int64_t long_bytes(std::uint64_t n) {
    if (n == 0) return 0;
    if (n > 8) fail("integer wider than 64 bits");
    const auto s = take(n);
    std::uint64_t v = 0;
    for (std::uint64_t i = n; i-- > 0;) v = (v << 8) | static_cast<unsigned char>(s[i]);
    if (n < 8 && (static_cast<unsigned char>(s[n - 1]) & 0x80)) v |= ~0ULL << (8 * n);
    return static_cast<std::int64_t>(v);
  }

  std::string line() {
    const auto end = d_.find('\n', pos_);
    if (end == std::string_view::npos) fail("unterminated text argument");
    std::string s(d_.substr(pos_, end - pos_));
    pos_ = end + 1;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  }

  std::int64_t parse_int(const std::string& s) {
    std::int64_t v = 0;
    const auto* b = s.data();
    if (!s.empty() && s[0] == '+') ++b;
    const auto r = std::from_chars(b, s.data() + s.size(), v);
    if (r.ec != std::errc{}) fail("bad integer '" + s + "'");
    return v;
  }

  std::string unquote(const std::string& s) {
    if (s.size() < 2 || (s.front() != '\'' && s.front() != '"') || s.back() != s.front()) {
      fail("bad STRING argument");
    }
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] != '\\') {
        out.push_back(s[i]);
        continue;
      }
      if (++i + 1 > s.size() - 1) fail("dangling escape");
      const char c = s[i];
      switch (c) {
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'a': out.push_back('\a'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'v': out.push_back('\v'); break;
        case 'x': {
          if (i + 2 >= s.size()) fail("short \\x escape");
          out.push_back(static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16)));
          i += 2;
          break;
        }
        default:
          if (c >= '0' && c <= '7') {
            int v = 0, k = 0;
            while (k < 3 && i < s.size() - 1 && s[i] >= '0' && s[i] <= '7') {
              v = v * 8 + (s[i] - '0');
              ++i;
              ++k;
            }
            --i;
            out.push_back(static_cast<char>(v));
          } else {
            out.push_back(c);
          }
      }
    }
    return out;
  }

  std::string raw_unicode_escape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == 'u' || s[i + 1] == 'U')) {
        const std::size_t len = s[i + 1] == 'u' ? 4 : 8;
        if (i + 2 + len > s.size()) fail("short unicode escape");
        append_utf8(out, static_cast<std::uint32_t>(std::stoul(s.substr(i + 2, len), nullptr, 16)));
        i += 1 + len;
      } else {
        append_utf8(out, static_cast<unsigned char>(s[i]));
      }
    }
    return out;
  }

  void push(ValuePtr v) { stack_.push_back(std::move(v)); }
  void push_bool(bool b) {
    auto v = make(Kind::boolean);
    v->boolean = b;
    push(v);
  }

  ValuePtr pop() {
    if (stack_.empty() || (!marks_.empty() && stack_.size() <= marks_.back())) fail("stack underflow");
    auto v = std::move(stack_.back());
    stack_.pop_back();
    return v;
  }

  ValuePtr& top() {
    if (stack_.empty()) fail("stack underflow");
    return stack_.back();
  }

  std::vector<ValuePtr> pop_mark() {
    if (marks_.empty()) fail("missing MARK");
    const auto at = marks_.back();
    marks_.pop_back();
    std::vector<ValuePtr> items(stack_.begin() + static_cast<std::ptrdiff_t>(at), stack_.end());
    stack_.resize(at);
    return items;
  }

  static ValuePtr sequence(Kind k, std::vector<ValuePtr> items) {
    auto v = make(k);
    v->items = std::move(items);
    return v;
  }

  void tuple_n(std::size_t n) {
    std::vector<ValuePtr> items(n);
    for (std::size_t i = n; i-- > 0;) items[i] = pop();
    push(sequence(Kind::tuple, std::move(items)));
  }

  void append_to(const ValuePtr& target, const std::vector<ValuePtr>& items) {
    if (target->kind == Kind::list) {
      target->items.insert(target->items.end(), items.begin(), items.end());
    } else if (target->kind == Kind::object) {
      target->list_items.insert(target->list_items.end(), items.begin(), items.end());
    } else {
      fail("APPEND target is not a list");
    }
  }

  void set_items(const ValuePtr& target, const std::vector<ValuePtr>& kv) {
    if (kv.size() % 2 != 0) fail("odd SETITEMS payload");
    if (target->kind != Kind::dict && target->kind != Kind::object) fail("SETITEM target is not a dict");
    for (std::size_t i = 0; i < kv.size(); i += 2) {
      target->entries.emplace_back(kv[i], kv[i + 1]);
    }
  }

  static ValuePtr global(const std::string& mod, const std::string& nm) {
    auto v = make(Kind::global);
    v->module = mod;
    v->name = nm;
    return v;
  }

  ValuePtr call(const ValuePtr& fn, const ValuePtr& args) {
    if (fn->kind != Kind::global) fail("call of a non-global");
    if (args->kind != Kind::tuple) fail("call arguments are not a tuple");
    if (fn->is_global("_codecs", "encode") && !args->items.empty() &&
        args->items[0]->kind == Kind::str) {
      return make_text(Kind::bytes, latin1(args->items[0]->text));
    }
    if ((fn->is_global("copy_reg", "_reconstructor") || fn->is_global("copyreg", "_reconstructor")) &&
        !args->items.empty() && args->items[0]->kind == Kind::global) {
      auto obj = make(Kind::object);
      obj->callable = args->items[0];
      obj->args = make(Kind::tuple);
      return obj;
    }
    if (fn->is_global("builtins", "bytearray") || fn->is_global("__builtin__", "bytearray")) {
      if (args->items.empty()) return make(Kind::bytes);
      const auto& a = args->items[0];
      if (a->kind == Kind::bytes) return make_text(Kind::bytes, a->text);
      if (a->kind == Kind::str) return make_text(Kind::bytes, latin1(a->text));
    }
    auto obj = make(Kind::object);
    obj->callable = fn;
    obj->args = args;
    return obj;
  }

  std::string latin1(const std::string& utf8) {
    std::string out;
    for (std::size_t i = 0; i < utf8.size();) {
      const auto c = static_cast<unsigned char>(utf8[i]);
      std::uint32_t cp;
      std::size_t len;
      if (c < 0x80) {
        cp = c;
        len = 1;
      } else if ((c & 0xE0) == 0xC0 && i + 1 < utf8.size()) {
        cp = ((c & 0x1F) << 6) | (static_cast<unsigned char>(utf8[i + 1]) & 0x3F);
        len = 2;
      } else {
        fail("non latin-1 text in encoded bytes");
      }
      if (cp > 0xFF) fail("non latin-1 text in encoded bytes");
      out.push_back(static_cast<char>(cp));
      i += len;
    }
    return out;
  }

  ValuePtr memo_get(std::uint32_t id) {
    const auto it = memo_.find(id);
    if (it == memo_.end()) fail("memo key " + std::to_string(id) + " missing");
    return it->second;
  }

  std::string_view d_;
  std::string src_;
  std::size_t pos_ = 0;
  std::vector<ValuePtr> stack_;
  std::vector<std::size_t> marks_;
  std::unordered_map<std::uint32_t, ValuePtr> memo_;
};

std::string text_of(const ValuePtr& v, const char* what) {
  if (!v || (v->kind != Kind::str && v->kind != Kind::bytes)) {
    throw ConversionError(std::string("expected text for ") + what);
  }
  return v->text;
}

std::int64_t int_of(const ValuePtr& v, const char* what) {
  if (!v || v->kind != Kind::integer) throw ConversionError(std::string("expected integer for ") + what);
  return v->integer;
}

std::vector<std::size_t> shape_of(const ValuePtr& v) {
  if (!v || v->kind != Kind::tuple) throw ConversionError("expected a shape tuple");
  std::vector<std::size_t> shape;
  for (const auto& it : v->items) {
    const auto n = int_of(it, "shape");
    if (n < 0) throw ConversionError("negative dimension");
    shape.push_back(static_cast<std::size_t>(n));
  }
  return shape;
}

bool is_ndarray(const ValuePtr& v) {
  return v && v->kind == Kind::object && v->callable &&
         v->callable->kind == Kind::global && v->callable->name == "_reconstruct" &&
         v->callable->module.find("numpy") == 0;
}

std::vector<double> decode_numbers(const std::string& raw, const std::string& typestr, char order,
                                   std::size_t count) {
  if (typestr.size() < 2) throw ConversionError("unsupported dtype '" + typestr + "'");
  const char kind = typestr[0];
  const int width = std::stoi(typestr.substr(1));
  if (raw.size() != count * static_cast<std::size_t>(width)) {
    throw ConversionError("array payload is " + std::to_string(raw.size()) + " bytes, expected " +
                          std::to_string(count * static_cast<std::size_t>(width)));
  }
  const bool big = order == '>' || (order == '=' && std::endian::native == std::endian::big);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char b[8] = {};
    std::memcpy(b, raw.data() + i * static_cast<std::size_t>(width), static_cast<std::size_t>(width));
    if (big != (std::endian::native == std::endian::big)) std::reverse(b, b + width);
    std::uint64_t bits = 0;
    std::memcpy(&bits, b, static_cast<std::size_t>(width));
    if (kind == 'f' && width == 8) {
      double x;
      std::memcpy(&x, b, 8);
      out[i] = x;
    } else if (kind == 'f' && width == 4) {
      float x;
      std::memcpy(&x, b, 4);
      out[i] = x;
    } else if (kind == 'i') {
      const int shift = 64 - 8 * width;
      out[i] = static_cast<double>(static_cast<std::int64_t>(bits << shift) >> shift);
    } else if (kind == 'u' || kind == 'b') {
      out[i] = static_cast<double>(bits);
    } else {
      throw ConversionError("unsupported dtype '" + typestr + "'");
    }
  }
  return out;
}

Array ndarray_to_array(const ValuePtr& v) {
  const auto& st = v->state;
  if (!st || st->kind != Kind::tuple || st->items.size() < 4) {
    throw ConversionError("ndarray without a state tuple");
  }
  const std::size_t off = st->items.size() == 5 ? 1 : 0;
  Array a;
  a.shape = shape_of(st->items[off]);
  const auto& dtype = st->items[off + 1];
  if (!dtype || dtype->kind != Kind::object || !dtype->args || dtype->args->items.empty()) {
    throw ConversionError("ndarray without a dtype");
  }
  std::string typestr = text_of(dtype->args->items[0], "dtype");
  char order = '<';
  if (dtype->state && dtype->state->kind == Kind::tuple && dtype->state->items.size() > 1) {
    const auto o = text_of(dtype->state->items[1], "byte order");
    if (!o.empty()) order = o[0];
  }
  const bool fortran = st->items[off + 2]->kind == Kind::boolean ? st->items[off + 2]->boolean
                                                                 : st->items[off + 2]->integer != 0;
  const auto& payload = st->items[off + 3];
  if (payload->kind != Kind::bytes && payload->kind != Kind::str) {
    throw ConversionError("object arrays are not supported");
  }
  std::size_t count = 1;
  for (auto s : a.shape) count *= s;
  a.data = decode_numbers(payload->text, typestr, order, count);
  if (fortran && a.shape.size() == 2) {
    std::vector<double> rm(count);
    for (std::size_t i = 0; i < a.shape[0]; ++i) {
      for (std::size_t j = 0; j < a.shape[1]; ++j) rm[i * a.shape[1] + j] = a.data[j * a.shape[0] + i];
    }
    a.data = std::move(rm);
  }
  return a;
}

Array sparse_to_array(const ValuePtr& v, const std::string& cls) {
  const auto& st = v->state;
  if (!st || st->kind != Kind::dict) throw ConversionError("sparse matrix without a state dict");
  auto shape_v = st->get("_shape");
  if (!shape_v) shape_v = st->get("shape");
  Array a;
  a.shape = shape_of(shape_v);
  if (a.shape.size() != 2) throw ConversionError("sparse matrix is not 2-d");
  a.data.assign(a.shape[0] * a.shape[1], 0.0);
  auto field = [&](const char* key) {
    const auto f = st->get(key);
    if (!f) throw ConversionError(std::string("sparse matrix missing '") + key + "'");
    return to_array(f).data;
  };
  const auto data = field("data");
  if (cls.rfind("coo_", 0) == 0) {
    std::vector<double> row, col;
    if (st->get("row")) {
      row = field("row");
      col = field("col");
    } else {
      const auto coords = st->get("coords");
      if (!coords || coords->kind != Kind::tuple || coords->items.size() != 2) {
        throw ConversionError("coo matrix without coordinates");
      }
      row = to_array(coords->items[0]).data;
      col = to_array(coords->items[1]).data;
    }
    for (std::size_t k = 0; k < data.size(); ++k) {
      a.data.at(static_cast<std::size_t>(row[k]) * a.shape[1] + static_cast<std::size_t>(col[k])) += data[k];
    }
    return a;
  }
  const auto indices = field("indices");
  const auto indptr = field("indptr");
  const bool csr = cls.rfind("csr_", 0) == 0;
  const std::size_t outer = csr ? a.shape[0] : a.shape[1];
  if (indptr.size() != outer + 1) throw ConversionError("sparse indptr length mismatch");
  for (std::size_t r = 0; r < outer; ++r) {
    for (auto k = static_cast<std::size_t>(indptr[r]); k < static_cast<std::size_t>(indptr[r + 1]); ++k) {
      const auto c = static_cast<std::size_t>(indices.at(k));
      const std::size_t i = csr ? r : c;
      const std::size_t j = csr ? c : r;
      if (i >= a.shape[0] || j >= a.shape[1]) throw ConversionError("sparse index out of range");
      a.data[i * a.shape[1] + j] += data.at(k);
    }
  }
  return a;
}

}  // namespace

ValuePtr loads(std::string_view data, const std::string& source) {
  return Unpickler(data, source).run();
}

Array to_array(const ValuePtr& v) {
  if (is_ndarray(v)) return ndarray_to_array(v);
  if (v && v->kind == Kind::object && v->callable && v->callable->kind == Kind::global &&
      v->callable->module.find("scipy.sparse") == 0) {
    const auto& cls = v->callable->name;
    if (cls.rfind("csr_", 0) == 0 || cls.rfind("csc_", 0) == 0 || cls.rfind("coo_", 0) == 0) {
      return sparse_to_array(v, cls);
    }
    throw ConversionError("unsupported sparse class " + cls);
  }
  if (v && (v->kind == Kind::list || v->kind == Kind::tuple)) {
    Array a;
    a.shape = {v->items.size()};
    for (const auto& it : v->items) {
      if (it->kind == Kind::integer) a.data.push_back(static_cast<double>(it->integer));
      else if (it->kind == Kind::floating) a.data.push_back(it->floating);
      else throw ConversionError("non-numeric list element");
    }
    return a;
  }
  throw ConversionError("value is not a numeric array");
}

}  // namespace meguide::pickle
