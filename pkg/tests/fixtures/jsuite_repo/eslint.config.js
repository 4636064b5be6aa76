module.exports = [{}];
