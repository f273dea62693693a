from __future__ import annotations


class IndexedMinHeap:
    """Binary min-heap of (key, value) with a key -> slot index.

    Supports insert-or-increase in O(log n) and popping every root whose
    value falls below a threshold. Ties keep their structural order, so the
    heap is deterministic for a given operation sequence.
    """

    __slots__ = ("_keys", "_vals", "_pos")

    def __init__(self) -> None:
        self._keys: list = []
        self._vals: list = []
        self._pos: dict = {}

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key) -> bool:
        return key in self._pos

    def get(self, key, default=None):
        i = self._pos.get(key)
        return default if i is None else self._vals[i]

    def min(self):
        return self._keys[0], self._vals[0]

    def items(self) -> dict:
        return dict(zip(self._keys, self._vals))

    def push_or_increase(self, key, value) -> None:
        i = self._pos.get(key)
        if i is None:
            self._keys.append(key)
            self._vals.append(value)
            i = len(self._keys) - 1
            self._pos[key] = i
            self._sift_up(i)
        elif value > self._vals[i]:
            self._vals[i] = value
            self._sift_down(i)

    def add(self, key, delta) -> None:
        """Increase the value of a tracked key by ``delta`` (>= 0)."""
        i = self._pos[key]
        self._vals[i] += delta
        self._sift_down(i)

    def replace_min(self, key, value) -> tuple:
        """Swap out the root for (key, value); return the evicted (key, value)."""
        old = self._keys[0], self._vals[0]
        del self._pos[old[0]]
        self._keys[0] = key
        self._vals[0] = value
        self._pos[key] = 0
        self._sift_down(0)
        return old

    def pop_below(self, threshold) -> list:
        popped = []
        keys, vals = self._keys, self._vals
        while keys and vals[0] < threshold:
            popped.append((keys[0], vals[0]))
            del self._pos[keys[0]]
            last_k, last_v = keys.pop(), vals.pop()
            if keys:
                keys[0], vals[0] = last_k, last_v
                self._pos[last_k] = 0
                self._sift_down(0)
        return popped

    def _sift_up(self, i: int) -> None:
        keys, vals, pos = self._keys, self._vals, self._pos
        k, v = keys[i], vals[i]
        while i > 0:
            parent = (i - 1) >> 1
            if vals[parent] <= v:
                break
            keys[i], vals[i] = keys[parent], vals[parent]
            pos[keys[i]] = i
            i = parent
        keys[i], vals[i] = k, v
        pos[k] = i

    def _sift_down(self, i: int) -> None:
        keys, vals, pos = self._keys, self._vals, self._pos
        n = len(keys)
        k, v = keys[i], vals[i]
        while True:
            child = 2 * i + 1
            if child >= n:
                break
            right = child + 1
            if right < n and vals[right] < vals[child]:
                child = right
            if vals[child] >= v:
                break
            keys[i], vals[i] = keys[child], vals[child]
            pos[keys[i]] = i
            i = child
        keys[i], vals[i] = k, v
        pos[k] = i
