#ifndef CWC_MULTISET_HPP
#define CWC_MULTISET_HPP

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace cwc {

using Count = std::int64_t;

/// Multiset of atoms, kept as a name-sorted flat map. Species with count zero
/// are never stored, so two multisets are equal iff their entries are equal.
class Multiset {
public:
  using Entry = std::pair<std::string, Count>;
  using const_iterator = std::vector<Entry>::const_iterator;

  Multiset() = default;
  Multiset(std::initializer_list<std::pair<std::string_view, Count>> init) {
    for (const auto& [name, n] : init) add(name, n);
  }

  Count count(std::string_view name) const {
    auto it = find(name);
    return it != entries_.end() && it->first == name ? it->second : 0;
  }

  /// Adds n copies (n may be negative). Throws if the count would drop below 0.
  void add(std::string_view name, Count n = 1) {
    if (n == 0) return;
    auto it = find(name);
    if (it != entries_.end() && it->first == name) {
      Count next = it->second + n;
      if (next < 0) throw Error("negative count for atom '" + std::string(name) + "'");
      if (next == 0) entries_.erase(it);
      else it->second = next;
      return;
    }
    if (n < 0) throw Error("negative count for atom '" + std::string(name) + "'");
    entries_.insert(it, Entry{std::string(name), n});
  }

  void remove(std::string_view name, Count n = 1) { add(name, -n); }

  /// Overwrites the count of one species (0 erases it).
  void set(std::string_view name, Count n) {
    auto it = find(name);
    bool present = it != entries_.end() && it->first == name;
    if (n < 0) throw Error("negative count for atom '" + std::string(name) + "'");
    if (present) {
      if (n == 0) entries_.erase(it);
      else it->second = n;
    } else if (n != 0) {
      entries_.insert(it, Entry{std::string(name), n});
    }
  }

  void add_all(const Multiset& other) {
    for (const auto& [name, n] : other.entries_) add(name, n);
  }

  /// Removes other from this multiset; requires contains(other).
  void remove_all(const Multiset& other) {
    for (const auto& [name, n] : other.entries_) remove(name, n);
  }

  bool contains(const Multiset& other) const {
    return std::all_of(other.entries_.begin(), other.entries_.end(),
                       [&](const Entry& e) { return count(e.first) >= e.second; });
  }

  bool empty() const { return entries_.empty(); }
  std::size_t distinct() const { return entries_.size(); }
  Count size() const {
    Count total = 0;
    for (const auto& e : entries_) total += e.second;
    return total;
  }

  const_iterator begin() const { return entries_.begin(); }
  const_iterator end() const { return entries_.end(); }

  friend bool operator==(const Multiset&, const Multiset&) = default;
  friend auto operator<=>(const Multiset&, const Multiset&) = default;

private:
  std::vector<Entry>::iterator find(std::string_view name) {
    return std::lower_bound(entries_.begin(), entries_.end(), name,
                            [](const Entry& e, std::string_view n) { return e.first < n; });
  }
  std::vector<Entry>::const_iterator find(std::string_view name) const {
    return std::lower_bound(entries_.begin(), entries_.end(), name,
                            [](const Entry& e, std::string_view n) { return e.first < n; });
  }

  std::vector<Entry> entries_;
};

/// Number of ways to choose k items out of n (0 when k > n).
inline std::uint64_t binomial(Count n, Count k) {
  if (k < 0 || n < k) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (Count i = 1; i <= k; ++i) result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return result;
}

/// ∏ C(n_s, m_s) over the species of `wanted`: ways of picking `wanted` out of `from`.
inline std::uint64_t selections(const Multiset& from, const Multiset& wanted) {
  std::uint64_t ways = 1;
  for (const auto& [name, m] : wanted) {
    ways *= binomial(from.count(name), m);
    if (ways == 0) return 0;
  }
  return ways;
}

} // namespace cwc

#endif // CWC_MULTISET_HPP
