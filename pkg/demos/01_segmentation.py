"""
Overlapping segmentation
========================

Cut a token stream into fixed windows that share a few positions with
their neighbors, then stitch the original stream back together.
"""

from chunkfuse import reconstruct, segment

tokens = list(range(100, 126))  # 26 fake token ids

# windows of 8 tokens, consecutive windows sharing 3 positions
windows = segment(tokens, chunk_len=8, overlap=3)

print(f"{len(tokens)} tokens -> {windows.count} windows "
      f"(stride {windows.stride})\n")
print("idx  start  tokens")
for w in windows:
    print(f"{w.index:>3}  {w.start:>5}  {list(w.tokens)}")

# the last window is anchored to the end of the stream, so it can share
# more than `overlap` positions with its neighbor but is never padded
roundtrip = reconstruct(windows)
print("\nreconstruction matches the input:", roundtrip == tuple(tokens))
