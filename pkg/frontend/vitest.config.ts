import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the live round trip boots the real training service
    testTimeout: 15000,
    hookTimeout: 30000,
  },
});
