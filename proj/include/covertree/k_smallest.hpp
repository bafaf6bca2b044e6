#ifndef COVERTREE_K_SMALLEST_HPP
#define COVERTREE_K_SMALLEST_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace covertree {

/**
 * Returns the min(k, |items|) items with the smallest keys, in ascending key
 * order, using a max-heap capped at k entries: O(|items| log k) comparisons.
 *
 * `key` maps an item to any totally ordered value. Callers that need the
 * id tie-rule pass a (distance, id) pair as the key.
 */
template <class Item, class KeyFn>
std::vector<Item> k_smallest(std::span<const Item> items, KeyFn key, std::size_t k) {
    if (k == 0) {
        throw ParameterError("k must be positive");
    }
    using Key = std::decay_t<decltype(key(items.front()))>;
    using Entry = std::pair<Key, std::size_t>;

    std::vector<Entry> heap;
    heap.reserve(std::min(k, items.size()) + 1);
    auto less = [](const Entry& a, const Entry& b) { return a.first < b.first; };

    for (std::size_t i = 0; i < items.size(); ++i) {
        Key current = key(items[i]);
        if (heap.size() == k) {
            // Full heap: only a strictly smaller key can displace the maximum.
            if (!(current < heap.front().first)) {
                continue;
            }
            std::pop_heap(heap.begin(), heap.end(), less);
            heap.back() = Entry(std::move(current), i);
        } else {
            heap.emplace_back(std::move(current), i);
        }
        std::push_heap(heap.begin(), heap.end(), less);
    }

    std::sort_heap(heap.begin(), heap.end(), less);
    std::vector<Item> out;
    out.reserve(heap.size());
    for (const auto& e : heap) {
        out.push_back(items[e.second]);
    }
    return out;
}

template <class Item, class KeyFn>
std::vector<Item> k_smallest(const std::vector<Item>& items, KeyFn key, std::size_t k) {
    return k_smallest(std::span<const Item>(items), std::move(key), k);
}

} // namespace covertree

#endif
