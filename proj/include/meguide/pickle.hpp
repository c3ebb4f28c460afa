#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace meguide::pickle {

struct Value;
using ValuePtr = std::shared_ptr<Value>;

// Python object graph produced by the unpickler. Nothing is ever executed:
// GLOBAL yields a reference, REDUCE/NEWOBJ record the call, BUILD records the
// state.
struct Value {
  enum class Kind { none, boolean, integer, floating, str, bytes, tuple, list, dict, set, global, object };
  Kind kind = Kind::none;
  bool boolean = false;
  std::int64_t integer = 0;
  double floating = 0.0;
  std::string text;    // str (UTF-8) or bytes payload
  std::string module;  // global
  std::string name;    // global
  std::vector<ValuePtr> items;                        // tuple, list, set
  std::vector<std::pair<ValuePtr, ValuePtr>> entries;  // dict, object dict items
  ValuePtr callable;   // object: the called global
  ValuePtr args;       // object: argument tuple
  ValuePtr state;      // object: BUILD state
  std::vector<ValuePtr> list_items;  // object: APPENDS onto a list subclass

  bool is_global(std::string_view mod_suffix, std::string_view nm) const;
  // Returns the dict entry with a str key, or nullptr.
  ValuePtr get(std::string_view key) const;
};

// Parses a pickle stream (protocols 0 to 4). Throws ConversionError on
// malformed input or unsupported opcodes.
ValuePtr loads(std::string_view data, const std::string& source = "<pickle>");

// Dense numeric array decoded from a numpy ndarray or scipy sparse matrix.
struct Array {
  std::vector<std::size_t> shape;
  std::vector<double> data;  // row-major

  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
};

// Interprets numpy.ndarray reconstructions (any of b1/i1..i8/u1..u8/f4/f8,
// either byte order) and scipy csr/csc/coo matrices, returning dense data.
Array to_array(const ValuePtr& v);

}  // namespace meguide::pickle
