"""Independent xoshiro256++ / SplitMix64 reference used to pin the Rust Rng stream."""
M = (1 << 64) - 1


def splitmix_stream(seed):
    s = seed
    while True:
        s = (s + 0x9E3779B97F4A7C15) & M
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
        yield z ^ (z >> 31)


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M


def xoshiro(seed):
    g = splitmix_stream(seed)
    s = [next(g) for _ in range(4)]
    while True:
        result = (rotl((s[0] + s[3]) & M, 23) + s[0]) & M
        t = (s[1] << 17) & M
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        yield result


if __name__ == "__main__":
    for seed in (0, 42):
        g = xoshiro(seed)
        vals = [next(g) for _ in range(4)]
        print(seed, [hex(v) for v in vals])
    g = xoshiro(42)
    print("uniform", repr((next(g) >> 11) * 2.0 ** -53))
