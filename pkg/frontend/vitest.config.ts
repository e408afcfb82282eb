import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the suite generates a workspace and boots the real service once
    hookTimeout: 120_000,
    testTimeout: 60_000,
    fileParallelism: false,
  },
});
