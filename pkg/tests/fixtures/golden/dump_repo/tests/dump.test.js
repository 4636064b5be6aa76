const test = require('node:test');
const assert = require('node:assert');
const { dump } = require('../dump.js');

test('dump is callable', () => {
  assert.strictEqual(typeof dump, 'function');
  dump(function sample() {}, 'p.');
});
