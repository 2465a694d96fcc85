import { defineConfig } from 'vitest/config';

// The contract suite boots the real backend process, so hooks and tests
// get generous timeouts.
export default defineConfig({
  test: {
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
