/**
 * SplitMix64 streams, bit-identical to the core toolkit's generator
 * (docs/formats.md §8). All arithmetic is 64-bit wrapping via BigInt; only
 * the final narrowing to `number` leaves BigInt land, and it is exact by
 * construction (values < 2^53).
 */

const MASK64 = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x00000100000001b3n;

export const DOMAIN_EXPLORE = 0x7452ee5d1b3467a1n;
export const DOMAIN_STREAM = 0x23f1d0c8a9b54e6fn;
export const DOMAIN_SPLIT = 0x5ac6e9d4f0327b8dn;

export function mix64(value: bigint): bigint {
  let z = value & MASK64;
  z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
  z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
  return z ^ (z >> 31n);
}

export function fnv1a64(data: Uint8Array): bigint {
  let hash = FNV_OFFSET;
  for (const byte of data) {
    hash = ((hash ^ BigInt(byte)) * FNV_PRIME) & MASK64;
  }
  return hash;
}

export function deriveSeed(seed: bigint | number, domain: bigint, key = ""): bigint {
  const bytes = new TextEncoder().encode(key);
  return mix64((BigInt(seed) & MASK64) ^ domain ^ fnv1a64(bytes));
}

export class Rng {
  private state: bigint;

  constructor(seed: bigint | number) {
    this.state = BigInt(seed) & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK64;
    return mix64(this.state);
  }

  /** Uniform double in [0, 1) with 53 bits of precision. */
  random(): number {
    return Number(this.nextU64() >> 11n) * 2 ** -53;
  }

  /** Uniform integer in [0, n); plain modulo, matching the core. */
  below(n: number): number {
    if (n <= 0) throw new RangeError("below() requires n >= 1");
    return Number(this.nextU64() % BigInt(n));
  }
}
