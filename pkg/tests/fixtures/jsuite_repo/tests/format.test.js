const test = require('node:test');
const assert = require('node:assert');
const { greet } = require('../src/format.js');

test('greet works', () => {
  assert.strictEqual(greet('ada'), 'hello, ada!');
});
